//! Scripted beacon events and the five built-in experiments.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::ColorClass;
use crate::Vec2;

pub const DEFAULT_TIME_LIMIT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    #[default]
    Neucf,
    Poly,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::Neucf => "neucf",
            ControllerKind::Poly => "poly",
        }
    }
}

impl core::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neucf" => Ok(ControllerKind::Neucf),
            "poly" => Ok(ControllerKind::Poly),
            other => Err(Error::ScenarioInvalid(format!("unknown controller {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace { width: crate::WORKSPACE_WIDTH, height: crate::WORKSPACE_HEIGHT }
    }
}

impl Workspace {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.width, self.height)
    }
}

/// Beacon ids in scripts are assigned in order of `add_beacon` events,
/// starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    AddBeacon { color: ColorClass, pos_cm: Vec2 },
    RemoveBeacon { id: u32 },
    MoveBeacon { id: u32, pos_cm: Vec2 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub t: f64,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub controller: ControllerKind,
    #[serde(default)]
    pub workspace: Workspace,
    /// Operating time for the polynomial baseline, s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_duration: Option<f64>,
}

fn default_time_limit() -> f64 {
    DEFAULT_TIME_LIMIT
}

impl ScenarioScript {
    pub fn empty(name: &str) -> Self {
        ScenarioScript {
            name: name.to_string(),
            seed: 0,
            time_limit: DEFAULT_TIME_LIMIT,
            events: Vec::new(),
            controller: ControllerKind::Neucf,
            workspace: Workspace::default(),
            baseline_duration: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ScenarioInvalid(m));
        let ws = &self.workspace;
        if !(ws.width > 0.0 && ws.height > 0.0 && ws.width.is_finite() && ws.height.is_finite()) {
            return bad(format!("workspace must be positive, got {}x{}", ws.width, ws.height));
        }
        if !(self.time_limit > 0.0 && self.time_limit.is_finite()) {
            return bad(format!("time_limit must be positive, got {}", self.time_limit));
        }
        if let Some(d) = self.baseline_duration {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("baseline_duration must be positive, got {d}"));
            }
        }
        let mut live: Vec<bool> = Vec::new();
        let mut prev = 0.0;
        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.t >= 0.0 && ev.t.is_finite()) {
                return bad(format!("event {i}: time {} is not a non-negative number", ev.t));
            }
            if ev.t < prev {
                return bad(format!("event {i}: events are not sorted by time ({} after {prev})", ev.t));
            }
            if ev.t > self.time_limit {
                return bad(format!("event {i}: time {} exceeds time_limit {}", ev.t, self.time_limit));
            }
            prev = ev.t;
            let check_pos = |p: &Vec2| {
                if ws.contains(*p) {
                    Ok(())
                } else {
                    bad(format!("event {i}: position ({}, {}) is outside the {}x{} workspace", p.x, p.y, ws.width, ws.height))
                }
            };
            match &ev.action {
                Action::AddBeacon { pos_cm, .. } => {
                    check_pos(pos_cm)?;
                    live.push(true);
                }
                Action::RemoveBeacon { id } => match live.get_mut(*id as usize) {
                    Some(alive @ true) => *alive = false,
                    _ => return bad(format!("event {i}: beacon {id} does not exist")),
                },
                Action::MoveBeacon { id, pos_cm } => {
                    check_pos(pos_cm)?;
                    if live.get(*id as usize) != Some(&true) {
                        return bad(format!("event {i}: beacon {id} does not exist"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of beacons present at time 0.
    pub fn initial_beacons(&self) -> usize {
        self.events.iter().filter(|e| e.t == 0.0 && matches!(e.action, Action::AddBeacon { .. })).count()
    }
}

fn add(t: f64, color: ColorClass, x: f64, y: f64) -> Event {
    Event { t, action: Action::AddBeacon { color, pos_cm: Vec2::new(x, y) } }
}

fn remove(t: f64, id: u32) -> Event {
    Event { t, action: Action::RemoveBeacon { id } }
}

fn script(name: &str, events: Vec<Event>, baseline_duration: Option<f64>) -> ScenarioScript {
    ScenarioScript { events, baseline_duration, ..ScenarioScript::empty(name) }
}

pub const BUILTIN_NAMES: [&str; 5] = ["static_1", "static_2", "stop", "switch_1", "switch_2"];

pub fn builtin_scenarios() -> Vec<ScenarioScript> {
    use ColorClass::{Green, Orange};
    vec![
        script("static_1", vec![add(0.0, Orange, 27.0, 35.0)], None),
        script("static_2", vec![add(0.0, Orange, 18.0, 22.0), add(0.0, Orange, 40.0, 30.0)], None),
        script("stop", vec![add(0.0, Orange, 20.0, 20.0), add(2.0, Green, 45.0, 8.0)], Some(3.0)),
        // The replacement lands inside the association gate, so the tracker
        // sees the beacon as moved.
        script("switch_1", vec![add(0.0, Orange, 27.0, 35.0), remove(2.0, 0), add(2.0, Orange, 15.0, 38.0)], None),
        script("switch_2", vec![add(0.0, Orange, 26.0, 26.0), add(0.0, Orange, 6.0, 44.0), remove(1.0, 0)], None),
    ]
}

pub fn builtin(name: &str) -> Option<ScenarioScript> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}
