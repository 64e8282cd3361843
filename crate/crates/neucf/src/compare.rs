//! Side-by-side evaluation of the field controller and the cubic baseline.

use std::fmt::Write as _;

use neucf_core::metrics::{MeanStd, MetricsBundle};
use neucf_core::scenario::{ControllerKind, ScenarioScript};
use neucf_core::sim::{run_scenario, RunOutcome, RunStatus, SimConfig};
use neucf_core::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellResult {
    Ok {
        runs: usize,
        metrics: MetricsBundle,
        /// Movement onset to end of run, over the repeats.
        operating_time: Option<MeanStd>,
        statuses: Vec<RunStatus>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub scenario: String,
    pub neucf: CellResult,
    pub poly: CellResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<CompareRow>,
}

fn summarize(outcomes: &[RunOutcome]) -> CellResult {
    let metrics: Vec<MetricsBundle> = outcomes.iter().map(|o| o.metrics).collect();
    let finals: Vec<Vec2> = outcomes.iter().map(|o| o.log.last().p).collect();
    let target = outcomes.iter().find_map(|o| o.goal);
    let times: Vec<f64> = outcomes.iter().filter_map(|o| o.operating_time()).collect();
    CellResult::Ok {
        runs: outcomes.len(),
        metrics: MetricsBundle::aggregate(&metrics, &finals, target),
        operating_time: (!times.is_empty()).then(|| MeanStd::of(&times)),
        statuses: outcomes.iter().map(|o| o.status).collect(),
    }
}

fn with_controller(script: &ScenarioScript, kind: ControllerKind, seed: u64) -> ScenarioScript {
    ScenarioScript { controller: kind, seed, ..script.clone() }
}

/// Runs both controllers on one scenario for every seed. Each baseline run
/// gets the field controller's measured operating time for the same seed when
/// that run reached its goal.
pub fn compare_scenario(script: &ScenarioScript, seeds: &[u64], cfg: &SimConfig) -> CompareRow {
    let neucf: Result<Vec<RunOutcome>, String> = seeds
        .iter()
        .map(|&seed| run_scenario(&with_controller(script, ControllerKind::Neucf, seed), cfg).map_err(|e| e.to_string()))
        .collect();
    let budgets: Vec<Option<f64>> = match &neucf {
        Ok(runs) => runs
            .iter()
            .map(|o| matches!(o.status, RunStatus::GoalReached { .. }).then(|| o.operating_time()).flatten())
            .collect(),
        Err(_) => vec![None; seeds.len()],
    };
    let poly: Result<Vec<RunOutcome>, String> = seeds
        .iter()
        .zip(budgets)
        .map(|(&seed, budget)| {
            let cfg = SimConfig { baseline_duration: budget.or(cfg.baseline_duration), ..*cfg };
            run_scenario(&with_controller(script, ControllerKind::Poly, seed), &cfg).map_err(|e| e.to_string())
        })
        .collect();
    let cell = |r: Result<Vec<RunOutcome>, String>| match r {
        Ok(runs) => summarize(&runs),
        Err(error) => {
            log::warn!("{}: {error}", script.name);
            CellResult::Failed { error }
        }
    };
    CompareRow { scenario: script.name.clone(), neucf: cell(neucf), poly: cell(poly) }
}

/// Scenarios are evaluated on parallel workers; each run is single-threaded
/// and seeded, so the report does not depend on scheduling.
pub fn compare(scripts: &[ScenarioScript], seeds: &[u64], cfg: &SimConfig) -> CompareReport {
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = scripts.iter().map(|s| scope.spawn(move || compare_scenario(s, seeds, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("compare worker panicked")).collect()
    });
    CompareReport { seeds: seeds.to_vec(), rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Static,
    Stop,
    Switch,
    Other,
}

fn family(name: &str) -> Family {
    if name.starts_with("static") {
        Family::Static
    } else if name.starts_with("stop") {
        Family::Stop
    } else if name.starts_with("switch") {
        Family::Switch
    } else {
        Family::Other
    }
}

type Row = (&'static str, fn(&MetricsBundle) -> String);

fn mean_std(m: Option<MeanStd>) -> String {
    m.map_or_else(|| "n/a".to_string(), |m| format!("{:.3} ± {:.3}", m.mean, m.std))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
}

const ERR_ROWS: [Row; 2] = [("X error (cm)", |m| mean_std(m.err_x)), ("Y error (cm)", |m| mean_std(m.err_y))];
const STATIC_ROWS: [Row; 2] = [("path length (cm)", |m| format!("{:.3}", m.path_length)), ("r²", |m| opt(m.r2, 6))];
const MOTION_ROWS: [Row; 2] = [
    ("acceleration (cm/s²)", |m| format!("{:.3} ± {:.3}", m.accel_mean, m.accel_std)),
    ("jerk (cm/s³)", |m| format!("{:.3} ± {:.3}", m.jerk_mean, m.jerk_std)),
];
const SMOOTH_ROWS: [Row; 2] =
    [("d2 variance", |m| format!("{:.3e}", m.d2_variance)), ("fractal slope", |m| opt(m.fractal_slope, 4))];

fn rows_for(f: Family) -> Vec<Row> {
    match f {
        Family::Static => [&ERR_ROWS[..], &STATIC_ROWS[..]].concat(),
        Family::Stop => [&STATIC_ROWS[..1], &MOTION_ROWS[..]].concat(),
        Family::Switch => [&ERR_ROWS[..], &MOTION_ROWS[..], &SMOOTH_ROWS[..]].concat(),
        Family::Other => [&ERR_ROWS[..], &STATIC_ROWS[..], &MOTION_ROWS[..], &SMOOTH_ROWS[..]].concat(),
    }
}

fn cell_text(c: &CellResult, f: fn(&MetricsBundle) -> String) -> String {
    match c {
        CellResult::Ok { metrics, .. } => f(metrics),
        CellResult::Failed { .. } => "FAILED".to_string(),
    }
}

fn operating_text(c: &CellResult) -> String {
    match c {
        CellResult::Ok { operating_time, .. } => mean_std(*operating_time),
        CellResult::Failed { .. } => "FAILED".to_string(),
    }
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut lines: Vec<(String, String, String)> =
                vec![("operating time (s)".into(), operating_text(&row.neucf), operating_text(&row.poly))];
            for (label, f) in rows_for(family(&row.scenario)) {
                lines.push((label.into(), cell_text(&row.neucf, f), cell_text(&row.poly, f)));
            }
            let w0 = lines.iter().map(|l| l.0.chars().count()).max().unwrap_or(0).max(8);
            let w1 = lines.iter().map(|l| l.1.chars().count()).max().unwrap_or(0).max(5);
            let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w.saturating_sub(s.chars().count())));
            writeln!(out, "{} (seeds: {:?})", row.scenario, self.seeds).unwrap();
            writeln!(out, "  {}  {}  Polynomial", pad("metric", w0), pad("NeuCF", w1)).unwrap();
            for (a, b, c) in &lines {
                writeln!(out, "  {}  {}  {}", pad(a, w0), pad(b, w1), c).unwrap();
            }
            for (name, cell) in [("NeuCF", &row.neucf), ("Polynomial", &row.poly)] {
                if let CellResult::Failed { error } = cell {
                    writeln!(out, "  {name} failed: {error}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
