//! Run artifacts. Floats use Rust's shortest round-trip formatting so that
//! equal runs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use neucf_core::control::ReachPolicy;
use neucf_core::field::NEURONS;
use neucf_core::metrics::MetricsBundle;
use neucf_core::scenario::ScenarioScript;
use neucf_core::sim::{RunOutcome, RunStatus, SimConfig, TrajectoryLog};
use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const FIELD_FILE: &str = "field_history.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const META_FILE: &str = "run_meta.json";

/// Signed zero prints as `0`.
fn num(x: f64) -> f64 {
    x + 0.0
}

pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let mut out = String::from("t,px,py,vx,vy,ux,uy,winner,active_count\n");
    for s in &log.samples {
        let winner = s.winner.map_or(-1, |w| w as i64);
        writeln!(out, "{},{},{},{},{},{},{},{},{}", s.t, num(s.p.x), num(s.p.y), num(s.v.x), num(s.v.y), num(s.u.x), num(s.u.y), winner, s.active_count)
            .expect("writing to a String cannot fail");
    }
    out
}

pub fn field_history_csv(log: &TrajectoryLog) -> String {
    let mut out = String::from("t");
    for j in 0..NEURONS {
        write!(out, ",u_{j}").expect("writing to a String cannot fail");
    }
    out.push('\n');
    for (s, row) in log.samples.iter().zip(&log.field_history) {
        write!(out, "{}", s.t).expect("writing to a String cannot fail");
        for u in row {
            write!(out, ",{}", num(*u)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Debug dump of a solved policy: one row per control step with the eight
/// feedback gains (row-major) and the two feedforward terms.
pub fn gains_csv(policy: &ReachPolicy, dt: f64) -> String {
    let mut out = String::from("t");
    for r in 0..2 {
        for c in 0..4 {
            write!(out, ",L{r}{c}").expect("writing to a String cannot fail");
        }
    }
    out.push_str(",l0,l1\n");
    for (k, (l, ff)) in policy.gains.iter().zip(&policy.feedforward).enumerate() {
        write!(out, "{}", (k + 1) as f64 * dt).expect("writing to a String cannot fail");
        for r in 0..2 {
            for c in 0..4 {
                write!(out, ",{}", l[(r, c)]).expect("writing to a String cannot fail");
            }
        }
        writeln!(out, ",{},{}", ff[0], ff[1]).expect("writing to a String cannot fail");
    }
    out
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMeta {
    pub version: String,
    pub source: String,
    pub seed: u64,
    pub scenario: ScenarioScript,
    pub config: SimConfig,
    pub status: RunStatus,
    pub movement_onset: Option<f64>,
}

impl RunMeta {
    pub fn new(source: &str, scenario: &ScenarioScript, config: &SimConfig, outcome: &RunOutcome) -> Self {
        RunMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            source: source.to_string(),
            seed: scenario.seed,
            scenario: scenario.clone(),
            config: *config,
            status: outcome.status,
            movement_onset: outcome.movement_onset,
        }
    }
}

pub fn metrics_json(m: &MetricsBundle) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialization cannot fail")
}

pub fn write_run(dir: &Path, outcome: &RunOutcome, meta: &RunMeta) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.to_path_buf(), source })?;
    io::write_file(&dir.join(TRAJECTORY_FILE), trajectory_csv(&outcome.log))?;
    io::write_file(&dir.join(FIELD_FILE), field_history_csv(&outcome.log))?;
    io::write_file(&dir.join(METRICS_FILE), metrics_json(&outcome.metrics))?;
    let meta = serde_json::to_string_pretty(meta).expect("meta serialization cannot fail");
    io::write_file(&dir.join(META_FILE), meta)
}
