//! Fixed-step closed-loop runner.
//!
//! Each tick applies due beacon events, feeds a camera frame to the tracker
//! when one is due, composes the field inputs from the tracked beacons, steps
//! the field, activates and blends controllers (or follows the cubic
//! baseline), integrates the plant and logs the result.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::{sample_trajectory, CubicProfile};
use crate::control::{
    blend_commands, make_problem, solve_policy, winner_command, BankEntry, ControllerConfig, PolicyBank,
    PolicyProblem, State, MIN_REACH,
};
use crate::error::{Error, Result};
use crate::field::{
    compose_inputs, desirability, egocentric_direction, winner, Desirability, FieldModel, FieldParams, FieldState,
    TargetCue, NEURONS,
};
use crate::geometry::WorkspaceCalib;
use crate::metrics::MetricsBundle;
use crate::plant::{plant_step, PlantState};
use crate::scenario::{Action, ControllerKind, Event, ScenarioScript};
use crate::tracker::{BeaconTrack, Detection, FrameExtent, Tracker, TrackerConfig};
use crate::vision::{segment_beacons, Blob, ColorClass, RasterImage, SegmentationConfig};
use crate::{Vec2, MAX_SPEED};

/// Rendered frames use this many pixels per centimetre.
pub const PX_PER_CM: f64 = 10.0;
/// Radius of a beacon ball, cm.
pub const BALL_RADIUS_CM: f64 = 3.75;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Control tick, s. Overrides the field and controller step.
    pub dt: f64,
    pub field: FieldParams,
    pub controller: ControllerConfig,
    pub tracker: TrackerConfig,
    pub segmentation: SegmentationConfig,
    pub camera_fps: f64,
    /// Render and segment synthetic frames instead of injecting detections.
    pub vision_mode: bool,
    pub goal_tolerance: f64,
    pub goal_speed: f64,
    /// Below this distance the egocentric direction to a beacon is frozen, cm.
    pub hold_radius: f64,
    /// Operating time for the polynomial baseline, s. Takes precedence over
    /// the scenario's value.
    pub baseline_duration: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            field: FieldParams::default(),
            controller: ControllerConfig::default(),
            tracker: TrackerConfig::default(),
            segmentation: SegmentationConfig::default(),
            camera_fps: 30.0,
            vision_mode: false,
            goal_tolerance: 0.5,
            goal_speed: 0.5,
            hold_radius: 2.0,
            baseline_duration: None,
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        SimConfig { field: FieldParams::noiseless(), ..Default::default() }
    }

    /// The configuration with the tick propagated into the sub-configs.
    pub fn effective(&self) -> Self {
        let mut c = *self;
        c.field.dt = c.dt;
        c.controller.dt = c.dt;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.effective();
        c.field.validate()?;
        c.controller.validate()?;
        if !(c.camera_fps > 0.0 && c.goal_tolerance > 0.0 && c.goal_speed > 0.0 && c.hold_radius >= 0.0) {
            return Err(Error::InvalidProblem("camera_fps, goal tolerances and hold_radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    GoalReached { t: f64 },
    Stopped { t: f64 },
    Timeout { t: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::GoalReached { .. } => "goal_reached",
            RunStatus::Stopped { .. } => "stopped",
            RunStatus::Timeout { .. } => "timeout",
        }
    }

    pub fn t(&self) -> f64 {
        match *self {
            RunStatus::GoalReached { t } | RunStatus::Stopped { t } | RunStatus::Timeout { t } => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub p: Vec2,
    pub v: Vec2,
    pub u: Vec2,
    pub winner: Option<usize>,
    pub active_count: usize,
    pub desirability: Vec<(usize, f64)>,
    pub beacons: Vec<BeaconTrack>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Field activity, one row per sample.
    pub field_history: Vec<Vec<f64>>,
}

impl TrajectoryLog {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.samples.iter().map(|s| s.p).collect()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("log always holds the initial sample")
    }
}

/// Ground-truth beacon on the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldBeacon {
    pub id: u32,
    pub color: ColorClass,
    pub pos: Vec2,
}

#[derive(Debug, Clone)]
struct Cue {
    track_id: u32,
    pos: Vec2,
    direction_deg: f64,
    distance: f64,
}

#[derive(Debug, Clone)]
struct BaselinePlan {
    profile: CubicProfile,
    t0: f64,
    goal_track: u32,
}

pub struct Simulation {
    cfg: SimConfig,
    script: ScenarioScript,
    model: FieldModel,
    rng: ChaCha8Rng,
    calib: WorkspaceCalib,
    tick: u64,
    plant: PlantState,
    field: FieldState,
    tracker: Tracker,
    world: Vec<WorldBeacon>,
    next_world_id: u32,
    next_event: usize,
    live_queue: Vec<Action>,
    applied: Vec<Event>,
    bank: PolicyBank,
    held_dirs: BTreeMap<u32, f64>,
    onsets: BTreeMap<u32, f64>,
    last_frame_t: Option<f64>,
    desirability: Desirability,
    winner: Option<usize>,
    goal: Option<Vec2>,
    goal_track: Option<u32>,
    baseline: Option<BaselinePlan>,
    baseline_budget: Option<(f64, f64)>,
    movement_onset: Option<f64>,
    log: TrajectoryLog,
    status: Option<RunStatus>,
}

impl Simulation {
    pub fn new(script: ScenarioScript, cfg: &SimConfig) -> Result<Self> {
        script.validate()?;
        cfg.validate()?;
        let cfg = cfg.effective();
        let model = FieldModel::new(cfg.field)?;
        let calib = WorkspaceCalib {
            x_max_prime: script.workspace.width * PX_PER_CM,
            y_max_prime: script.workspace.height * PX_PER_CM,
            width: script.workspace.width,
            height: script.workspace.height,
        };
        let frame = FrameExtent { x_max: calib.x_max_prime, y_max: calib.y_max_prime };
        let field = FieldState::resting(&cfg.field);
        let plant = PlantState::default();
        let log = TrajectoryLog {
            dt: cfg.dt,
            samples: vec![Sample {
                t: 0.0,
                p: plant.p,
                v: plant.v,
                u: Vec2::zeros(),
                winner: None,
                active_count: 0,
                desirability: Vec::new(),
                beacons: Vec::new(),
            }],
            field_history: vec![field.u.clone()],
        };
        Ok(Simulation {
            rng: ChaCha8Rng::seed_from_u64(script.seed),
            tracker: Tracker::new(cfg.tracker, frame),
            cfg,
            model,
            calib,
            tick: 0,
            plant,
            field,
            world: Vec::new(),
            next_world_id: 0,
            next_event: 0,
            live_queue: Vec::new(),
            applied: Vec::new(),
            bank: PolicyBank::new(),
            held_dirs: BTreeMap::new(),
            onsets: BTreeMap::new(),
            last_frame_t: None,
            desirability: Desirability { d: vec![0.0; NEURONS], active_set: Vec::new() },
            winner: None,
            goal: None,
            goal_track: None,
            baseline: None,
            baseline_budget: None,
            movement_onset: None,
            log,
            status: None,
            script,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn script(&self) -> &ScenarioScript {
        &self.script
    }

    pub fn t(&self) -> f64 {
        self.tick as f64 * self.cfg.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn plant(&self) -> &PlantState {
        &self.plant
    }

    pub fn field(&self) -> &FieldState {
        &self.field
    }

    pub fn tracks(&self) -> &[BeaconTrack] {
        self.tracker.tracks()
    }

    pub fn world(&self) -> &[WorldBeacon] {
        &self.world
    }

    pub fn current_desirability(&self) -> &Desirability {
        &self.desirability
    }

    pub fn current_winner(&self) -> Option<usize> {
        self.winner
    }

    pub fn status(&self) -> Option<RunStatus> {
        self.status
    }

    pub fn is_finished(&self) -> bool {
        self.status.is_some()
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn movement_onset(&self) -> Option<f64> {
        self.movement_onset
    }

    /// Every event applied so far, stamped with the tick time it took effect.
    pub fn applied_events(&self) -> &[Event] {
        &self.applied
    }

    /// Queues a beacon action for the next tick. Returns the beacon id the
    /// action refers to (the id an added beacon will receive).
    pub fn enqueue(&mut self, action: Action) -> Result<u32> {
        if self.is_finished() {
            return Err(Error::ScenarioInvalid("run has finished".into()));
        }
        let ws = self.script.workspace;
        match action {
            Action::AddBeacon { pos_cm, .. } | Action::MoveBeacon { pos_cm, .. } if !ws.contains(pos_cm) => {
                return Err(Error::ScenarioInvalid("out of bounds".into()));
            }
            _ => {}
        }
        let queued_adds = self.live_queue.iter().filter(|a| matches!(a, Action::AddBeacon { .. })).count() as u32;
        match action {
            Action::AddBeacon { .. } => {
                self.live_queue.push(action);
                Ok(self.next_world_id + queued_adds)
            }
            Action::RemoveBeacon { id } | Action::MoveBeacon { id, .. } => {
                let present = self.world.iter().any(|b| b.id == id);
                let removing = self.live_queue.iter().any(|a| matches!(a, Action::RemoveBeacon { id: q } if *q == id));
                if !present || removing {
                    return Err(Error::ScenarioInvalid("unknown id".into()));
                }
                self.live_queue.push(action);
                Ok(id)
            }
        }
    }

    fn apply(&mut self, action: Action, t: f64) -> Result<()> {
        match action {
            Action::AddBeacon { color, pos_cm } => {
                self.world.push(WorldBeacon { id: self.next_world_id, color, pos: pos_cm });
                self.next_world_id += 1;
            }
            Action::RemoveBeacon { id } => {
                let before = self.world.len();
                self.world.retain(|b| b.id != id);
                if self.world.len() == before {
                    return Err(Error::ScenarioInvalid("unknown id".into()));
                }
            }
            Action::MoveBeacon { id, pos_cm } => {
                let b = self.world.iter_mut().find(|b| b.id == id).ok_or(Error::ScenarioInvalid("unknown id".into()))?;
                b.pos = pos_cm;
            }
        }
        self.applied.push(Event { t, action });
        Ok(())
    }

    fn frame_due(&self) -> bool {
        let index = |tick: u64| libm::floor(tick as f64 * self.cfg.dt * self.cfg.camera_fps + TIME_EPS) as i64;
        self.tick == 0 || index(self.tick) != index(self.tick - 1)
    }

    fn detections(&self) -> Vec<Detection> {
        let seg_area = |r_px: f64| libm::round(core::f64::consts::PI * r_px * r_px) as usize;
        if self.cfg.vision_mode {
            let (w, h) = (self.calib.x_max_prime as usize, self.calib.y_max_prime as usize);
            let mut img = RasterImage::filled(w, h, [255, 255, 255]);
            for b in &self.world {
                img.draw_disc(self.calib.world_to_pixel(b.pos), BALL_RADIUS_CM * PX_PER_CM, b.color.render_rgb());
            }
            segment_beacons(&img, &self.cfg.segmentation)
                .into_iter()
                .filter_map(|blob| {
                    let pos_real = self.calib.pixel_to_world(blob.centroid).ok()?;
                    Some(Detection { blob, pos_real })
                })
                .collect()
        } else {
            self.world
                .iter()
                .filter_map(|b| {
                    let centroid = self.calib.world_to_pixel(b.pos);
                    let pos_real = self.calib.pixel_to_world(centroid).ok()?;
                    let blob = Blob { color_class: b.color, centroid, area: seg_area(BALL_RADIUS_CM * PX_PER_CM) };
                    Some(Detection { blob, pos_real })
                })
                .collect()
        }
    }

    fn detected_in_last_frame(&self, track: &BeaconTrack) -> bool {
        self.last_frame_t.is_some_and(|t| track.t_vis == t)
    }

    fn target_cues(&mut self) -> Vec<Cue> {
        let ee = self.plant.p;
        let mut cues = Vec::new();
        for tr in self.tracker.tracks() {
            if tr.color_class != ColorClass::Orange || !tr.is_visible() {
                continue;
            }
            let distance = (tr.pos_real - ee).norm();
            let held = self.held_dirs.get(&tr.id).copied();
            let direction = match held {
                Some(d) if distance < self.cfg.hold_radius => Some(d),
                _ => egocentric_direction(ee, tr.pos_real).ok(),
            };
            match direction {
                Some(d) => {
                    self.held_dirs.insert(tr.id, d);
                    cues.push(Cue { track_id: tr.id, pos: tr.pos_real, direction_deg: d, distance });
                }
                None => {
                    self.held_dirs.remove(&tr.id);
                }
            }
        }
        cues
    }

    /// Time since the earliest visible stop cue appeared.
    fn stop_elapsed(&self, t: f64) -> Option<f64> {
        self.tracker
            .tracks()
            .iter()
            .filter(|tr| tr.color_class == ColorClass::Green && tr.is_visible())
            .filter_map(|tr| self.onsets.get(&tr.id))
            .map(|&onset| t - onset)
            .reduce(f64::max)
    }

    fn hold_entry(&self, track_id: Option<u32>, beacon_pos: Vec2) -> Result<BankEntry> {
        let cc = &self.cfg.controller;
        let prob = PolicyProblem::tracking(self.plant.p, cc.min_horizon_steps.max(2), cc);
        Ok(BankEntry { policy: solve_policy(&prob)?, start_tick: self.tick, beacon_pos, track_id })
    }

    fn plan_entry(&self, neuron: usize, cue: Option<&Cue>) -> Result<BankEntry> {
        let x = self.plant.as_state();
        match cue {
            Some(c) if c.distance >= MIN_REACH => {
                let prob = make_problem(&x, neuron as f64, c.distance, &self.cfg.controller)?;
                Ok(BankEntry { policy: solve_policy(&prob)?, start_tick: self.tick, beacon_pos: c.pos, track_id: Some(c.track_id) })
            }
            Some(c) => self.hold_entry(Some(c.track_id), c.pos),
            None => self.hold_entry(None, self.plant.p),
        }
    }

    fn neucf_command(&mut self, cues: &[Cue]) -> Result<Vec2> {
        let active = self.desirability.active_set.clone();
        self.bank.retain_active(&active);
        for &j in &active {
            let cue = cues.iter().min_by(|a, b| {
                (a.direction_deg - j as f64).abs().total_cmp(&(b.direction_deg - j as f64).abs())
            });
            let stale = match self.bank.entries.get(&j) {
                None => true,
                Some(e) => {
                    e.expired(self.tick)
                        || e.track_id != cue.map(|c| c.track_id)
                        || cue.is_some_and(|c| (c.pos - e.beacon_pos).norm() > self.cfg.controller.replan_distance)
                }
            };
            if stale {
                let entry = self.plan_entry(j, cue)?;
                self.bank.entries.insert(j, entry);
            }
        }
        let x: State = self.plant.as_state();
        let u = match (self.cfg.controller.wta_only, self.winner) {
            (true, Some(w)) => winner_command(&self.bank, w, &x, self.tick)?,
            _ => blend_commands(&self.bank, &self.desirability, &x, self.tick, self.cfg.controller.k_brake)?,
        };
        self.goal_track = self.winner.and_then(|w| self.bank.entries.get(&w)).and_then(|e| e.track_id);
        if let Some(pos) = self.goal_track.and_then(|id| self.tracker.get(id)).map(|tr| tr.pos_real) {
            self.goal = Some(pos);
        }
        if self.movement_onset.is_none() && !active.is_empty() {
            self.movement_onset = Some(self.t());
        }
        Ok(Vec2::new(u[0], u[1]))
    }

    fn poly_command(&mut self, cues: &[Cue], t: f64, stop: bool) -> Result<Vec2> {
        let p = self.plant.p;
        let v = self.plant.v;
        let k_brake = self.cfg.controller.k_brake;
        if stop {
            return Ok(-v * k_brake);
        }
        let nearest = cues.iter().min_by(|a, b| a.distance.total_cmp(&b.distance).then(a.track_id.cmp(&b.track_id)));
        let Some(goal) = nearest else {
            self.baseline = None;
            return Ok(-v * k_brake);
        };
        let refit = match &self.baseline {
            None => true,
            Some(b) => b.goal_track != goal.track_id || (b.profile.goal - goal.pos).norm() > self.cfg.controller.replan_distance,
        };
        if refit {
            let d = (goal.pos - p).norm();
            let (budget, t_start) = *self.baseline_budget.get_or_insert_with(|| {
                let dur = self
                    .cfg
                    .baseline_duration
                    .or(self.script.baseline_duration)
                    .unwrap_or(d / self.cfg.controller.v_nom);
                (dur, t)
            });
            let remaining = budget - (t - t_start);
            let t_final = remaining.max(1.5 * d / MAX_SPEED).max(self.cfg.dt);
            let profile = CubicProfile::new(p, goal.pos, t_final)?;
            self.baseline = Some(BaselinePlan { profile, t0: t, goal_track: goal.track_id });
            if self.movement_onset.is_none() && d >= MIN_REACH {
                self.movement_onset = Some(t);
            }
        }
        let plan = self.baseline.as_ref().expect("plan fitted above");
        self.goal_track = Some(plan.goal_track);
        self.goal = Some(goal.pos);
        let tau = (t + self.cfg.dt - plan.t0).min(plan.profile.t_final);
        let (p_des, _) = sample_trajectory(&plan.profile, tau)?;
        let dt = self.cfg.dt;
        Ok(((p_des - p) / dt - v) / dt)
    }

    /// Advances one control tick. Does nothing once the run has finished.
    pub fn step(&mut self) -> Result<()> {
        if self.is_finished() {
            return Ok(());
        }
        let t = self.t();

        while let Some(ev) = self.script.events.get(self.next_event).copied() {
            if ev.t > t + TIME_EPS {
                break;
            }
            self.next_event += 1;
            self.apply(ev.action, t)?;
        }
        for action in core::mem::take(&mut self.live_queue) {
            self.apply(action, t)?;
        }

        if self.frame_due() {
            let dets = self.detections();
            self.tracker.observe(&dets, t)?;
            for tr in self.tracker.tracks() {
                self.onsets.entry(tr.id).or_insert(t);
            }
            let live: Vec<u32> = self.tracker.tracks().iter().map(|tr| tr.id).collect();
            self.onsets.retain(|id, _| live.contains(id));
            self.held_dirs.retain(|id, _| live.contains(id));
            self.last_frame_t = Some(t);
        }

        let cues = self.target_cues();
        let stop_elapsed = self.stop_elapsed(t);

        let u = match self.script.controller {
            ControllerKind::Neucf => {
                let tc: Vec<TargetCue> =
                    cues.iter().map(|c| TargetCue { direction_deg: c.direction_deg, distance: c.distance }).collect();
                let inputs = compose_inputs(&tc, stop_elapsed, self.script.workspace.diagonal(), &self.cfg.field);
                self.field = self.model.step(&self.field, &inputs, &mut self.rng)?;
                self.desirability = desirability(&self.field.u, self.cfg.field.theta_init);
                self.winner = winner(&self.field.u, self.cfg.field.theta_init);
                self.neucf_command(&cues)?
            }
            ControllerKind::Poly => {
                self.field.t += self.cfg.dt;
                self.poly_command(&cues, t, stop_elapsed.is_some())?
            }
        };

        self.plant = plant_step(&self.plant, u, self.cfg.dt);
        self.tick += 1;
        let t_next = self.t();
        self.plant.t = t_next;

        self.log.samples.push(Sample {
            t: t_next,
            p: self.plant.p,
            v: self.plant.v,
            u,
            winner: self.winner,
            active_count: self.desirability.active_set.len(),
            desirability: self.desirability.sparse(),
            beacons: self.tracker.tracks().to_vec(),
        });
        self.log.field_history.push(self.field.u.clone());

        self.check_termination(t_next, stop_elapsed.is_some());
        Ok(())
    }

    fn check_termination(&mut self, t: f64, stop_visible: bool) {
        let pending = self.next_event < self.script.events.len() || !self.live_queue.is_empty();
        let slow = self.plant.speed() < self.cfg.goal_speed;
        if !pending && slow {
            let reached = self.goal_track.and_then(|id| self.tracker.get(id)).is_some_and(|tr| {
                self.detected_in_last_frame(tr) && (tr.pos_real - self.plant.p).norm() < self.cfg.goal_tolerance
            });
            let neucf_quiet = self.script.controller == ControllerKind::Poly || self.desirability.active_set.is_empty();
            if reached && !stop_visible {
                self.status = Some(RunStatus::GoalReached { t });
                return;
            }
            if stop_visible && neucf_quiet {
                self.status = Some(RunStatus::Stopped { t });
                self.goal = None;
                return;
            }
        }
        if t >= self.script.time_limit - TIME_EPS {
            self.status = Some(RunStatus::Timeout { t });
        }
    }

    /// Steps until the run finishes.
    pub fn run_to_end(&mut self) -> Result<RunStatus> {
        while self.status.is_none() {
            self.step()?;
        }
        Ok(self.status.expect("loop exits on status"))
    }

    pub fn finish(mut self) -> Result<RunOutcome> {
        let status = self.run_to_end()?;
        let metrics = MetricsBundle::from_run(&self.log.times(), &self.log.positions(), self.goal)?;
        Ok(RunOutcome {
            status,
            metrics,
            movement_onset: self.movement_onset,
            goal: self.goal,
            applied_events: self.applied,
            log: self.log,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub log: TrajectoryLog,
    pub status: RunStatus,
    pub metrics: MetricsBundle,
    pub movement_onset: Option<f64>,
    /// Where the run was heading when it ended; `None` after a stop.
    pub goal: Option<Vec2>,
    pub applied_events: Vec<Event>,
}

impl RunOutcome {
    /// Time from movement onset to the end of the run.
    pub fn operating_time(&self) -> Option<f64> {
        self.movement_onset.map(|t0| self.status.t() - t0)
    }
}

pub fn run_scenario(script: &ScenarioScript, cfg: &SimConfig) -> Result<RunOutcome> {
    Simulation::new(script.clone(), cfg)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin, Workspace};

    #[test]
    fn empty_script_never_moves() {
        let mut s = ScenarioScript::empty("empty");
        s.time_limit = 2.0;
        let out = run_scenario(&s, &SimConfig::default()).unwrap();
        assert!(matches!(out.status, RunStatus::Timeout { .. }));
        assert_eq!(out.log.samples.len(), 201);
        assert!(out.log.samples.iter().all(|x| x.p == Vec2::zeros() && x.v == Vec2::zeros()));
        assert_eq!(out.log.field_history.len(), out.log.samples.len());
    }

    #[test]
    fn times_are_uniform() {
        let mut s = builtin("static_1").unwrap();
        s.time_limit = 1.0;
        let out = run_scenario(&s, &SimConfig::noiseless()).unwrap();
        for (i, x) in out.log.samples.iter().enumerate() {
            assert_eq!(x.t, i as f64 * 0.01);
        }
    }

    #[test]
    fn frames_at_thirty_hz() {
        let s = ScenarioScript::empty("e");
        let mut sim = Simulation::new(s, &SimConfig::default()).unwrap();
        let mut due = 0;
        for _ in 0..100 {
            if sim.frame_due() {
                due += 1;
            }
            sim.step().unwrap();
        }
        assert_eq!(due, 30);
    }

    #[test]
    fn static_1_reaches() {
        let out = run_scenario(&builtin("static_1").unwrap(), &SimConfig::noiseless()).unwrap();
        assert!(matches!(out.status, RunStatus::GoalReached { .. }), "{:?}", out.status);
        let p = out.log.last().p;
        assert!((p - Vec2::new(27.0, 35.0)).norm() < 0.5);
        assert!(out.log.samples.iter().all(|s| s.v.norm() <= MAX_SPEED + 1e-12));
    }

    #[test]
    fn live_action_equals_scripted_event() {
        let base = builtin("static_1").unwrap();
        let mut live = Simulation::new(base.clone(), &SimConfig::default()).unwrap();
        for _ in 0..70 {
            live.step().unwrap();
        }
        live.enqueue(Action::AddBeacon { color: ColorClass::Orange, pos_cm: Vec2::new(40.0, 10.0) }).unwrap();
        let live_out = live.finish().unwrap();
        let mut replay = base;
        replay.events = live_out.applied_events.clone();
        assert_eq!(replay.events.len(), 2);
        assert!((replay.events[1].t - 0.7).abs() < 1e-12);
        let out = run_scenario(&replay, &SimConfig::default()).unwrap();
        assert_eq!(out.log, live_out.log);
    }

    #[test]
    fn enqueue_rejections() {
        let mut sim = Simulation::new(builtin("static_1").unwrap(), &SimConfig::default()).unwrap();
        sim.step().unwrap();
        assert!(sim.enqueue(Action::RemoveBeacon { id: 9 }).is_err());
        assert!(sim.enqueue(Action::AddBeacon { color: ColorClass::Green, pos_cm: Vec2::new(60.0, 1.0) }).is_err());
        assert_eq!(sim.enqueue(Action::RemoveBeacon { id: 0 }).unwrap(), 0);
        assert!(sim.enqueue(Action::RemoveBeacon { id: 0 }).is_err());
    }

    #[test]
    fn smaller_workspace_respected() {
        let mut s = ScenarioScript::empty("small");
        s.workspace = Workspace { width: 20.0, height: 20.0 };
        s.events.push(Event { t: 0.0, action: Action::AddBeacon { color: ColorClass::Orange, pos_cm: Vec2::new(10.0, 15.0) } });
        let out = run_scenario(&s, &SimConfig::noiseless()).unwrap();
        assert!(matches!(out.status, RunStatus::GoalReached { .. }));
    }
}
