//! Live simulation sessions driven by client commands.

use neucf_core::scenario::{Action, ControllerKind, Event, ScenarioScript};
use neucf_core::sim::{SimConfig, Simulation};
use neucf_core::tracker::BeaconTrack;
use neucf_core::vision::ColorClass;
use neucf_core::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    Running,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientCommand {
    Start {
        #[serde(default)]
        controller: ControllerKind,
        #[serde(default)]
        seed: u64,
    },
    Reset,
    AddBeacon { color: ColorClass, pos_cm: Vec2 },
    RemoveBeacon { id: u32 },
    MoveBeacon { id: u32, pos_cm: Vec2 },
    SetSpeed { multiplier: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndEffector {
    pub p: Vec2,
    pub v: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq: u64,
    pub t: f64,
    pub ee: EndEffector,
    pub beacons: Vec<BeaconTrack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<f64>>,
    pub desirability: Vec<(usize, f64)>,
    pub winner: Option<usize>,
    pub phase: Phase,
}

impl Snapshot {
    /// Keeps every second neuron (91 of 181 values).
    pub fn downsampled(&self) -> Snapshot {
        let field = self.field.as_ref().map(|f| f.iter().step_by(2).copied().collect());
        Snapshot { field, ..self.clone() }
    }
}

/// Messages the server sends over the socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Snapshot(Snapshot),
    Ack {
        command: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<u32>,
    },
    Nack {
        command: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("session not finished")]
    NotFinished,
}

impl ClientCommand {
    pub fn name(&self) -> &'static str {
        match self {
            ClientCommand::Start { .. } => "start",
            ClientCommand::Reset => "reset",
            ClientCommand::AddBeacon { .. } => "add_beacon",
            ClientCommand::RemoveBeacon { .. } => "remove_beacon",
            ClientCommand::MoveBeacon { .. } => "move_beacon",
            ClientCommand::SetSpeed { .. } => "set_speed",
        }
    }
}

pub struct Session {
    pub id: u64,
    cfg: SimConfig,
    time_limit: f64,
    sim: Option<Simulation>,
    phase: Phase,
    seq: u64,
    speed: f64,
}

impl Session {
    pub fn new(id: u64, cfg: SimConfig) -> Self {
        Session { id, cfg, time_limit: neucf_core::scenario::DEFAULT_TIME_LIMIT, sim: None, phase: Phase::Idle, seq: 0, speed: 1.0 }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    pub fn simulation(&self) -> Option<&Simulation> {
        self.sim.as_ref()
    }

    fn ack(cmd: &ClientCommand, id: Option<u32>) -> ServerMessage {
        ServerMessage::Ack { command: cmd.name().into(), id }
    }

    fn nack(cmd: &ClientCommand, reason: impl Into<String>) -> ServerMessage {
        ServerMessage::Nack { command: cmd.name().into(), reason: reason.into() }
    }

    /// Applies a client command. Beacon commands take effect at the next
    /// control tick.
    pub fn apply_client_command(&mut self, cmd: ClientCommand) -> ServerMessage {
        match cmd {
            ClientCommand::Start { controller, seed } => {
                if self.phase != Phase::Idle {
                    let reason = if self.phase == Phase::Running { "already running" } else { "wrong phase: finished" };
                    return Self::nack(&cmd, reason);
                }
                let script = ScenarioScript {
                    name: format!("session-{}", self.id),
                    seed,
                    controller,
                    time_limit: self.time_limit,
                    ..ScenarioScript::empty("session")
                };
                match Simulation::new(script, &self.cfg) {
                    Ok(sim) => {
                        self.sim = Some(sim);
                        self.phase = Phase::Running;
                        Self::ack(&cmd, None)
                    }
                    Err(e) => Self::nack(&cmd, e.to_string()),
                }
            }
            ClientCommand::Reset => {
                self.sim = None;
                self.phase = Phase::Idle;
                Self::ack(&cmd, None)
            }
            ClientCommand::SetSpeed { multiplier } => {
                if !(multiplier > 0.0 && multiplier.is_finite()) {
                    return Self::nack(&cmd, "speed multiplier must be positive");
                }
                self.speed = multiplier;
                Self::ack(&cmd, None)
            }
            ClientCommand::AddBeacon { color, pos_cm } => self.enqueue(&cmd, Action::AddBeacon { color, pos_cm }),
            ClientCommand::RemoveBeacon { id } => self.enqueue(&cmd, Action::RemoveBeacon { id }),
            ClientCommand::MoveBeacon { id, pos_cm } => self.enqueue(&cmd, Action::MoveBeacon { id, pos_cm }),
        }
    }

    fn enqueue(&mut self, cmd: &ClientCommand, action: Action) -> ServerMessage {
        let Some(sim) = self.sim.as_mut().filter(|_| self.phase == Phase::Running) else {
            return Self::nack(cmd, format!("wrong phase: {}", if self.phase == Phase::Idle { "idle" } else { "finished" }));
        };
        match sim.enqueue(action) {
            Ok(id) => Self::ack(cmd, Some(id)),
            Err(neucf_core::Error::ScenarioInvalid(reason)) => Self::nack(cmd, reason),
            Err(e) => Self::nack(cmd, e.to_string()),
        }
    }

    /// Advances one control tick while running.
    pub fn tick(&mut self) -> Result<(), neucf_core::Error> {
        if self.phase != Phase::Running {
            return Ok(());
        }
        let sim = self.sim.as_mut().expect("running sessions hold a simulation");
        let result = sim.step();
        if result.is_err() || sim.is_finished() {
            self.phase = Phase::Finished;
        }
        result
    }

    /// Next wire snapshot with the full-resolution field. Every call takes a
    /// new sequence number.
    pub fn snapshot(&mut self) -> Snapshot {
        self.seq += 1;
        let seq = self.seq;
        match (&self.sim, self.phase) {
            (Some(sim), phase) if phase != Phase::Idle => Snapshot {
                seq,
                t: sim.t(),
                ee: EndEffector { p: sim.plant().p, v: sim.plant().v },
                beacons: sim.tracks().to_vec(),
                field: Some(sim.field().u.clone()),
                desirability: sim.current_desirability().sparse(),
                winner: sim.current_winner(),
                phase,
            },
            _ => Snapshot {
                seq,
                t: 0.0,
                ee: EndEffector { p: Vec2::zeros(), v: Vec2::zeros() },
                beacons: Vec::new(),
                field: None,
                desirability: Vec::new(),
                winner: None,
                phase: Phase::Idle,
            },
        }
    }

    /// The injected events as a replayable script.
    pub fn record_session(&self) -> Result<ScenarioScript, SessionError> {
        match (&self.sim, self.phase) {
            (Some(sim), Phase::Finished) => {
                let events: Vec<Event> = sim.applied_events().to_vec();
                Ok(ScenarioScript { events, ..sim.script().clone() })
            }
            _ => Err(SessionError::NotFinished),
        }
    }
}
