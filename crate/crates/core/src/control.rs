//! Finite-horizon tracking LQR controllers, one per active field neuron.
//!
//! State is `[p_x, p_y, v_x, v_y]` in cm and cm/s; the control is an
//! acceleration in cm/s². Each reach minimises
//! `(D x_T - p)' Q_p (D x_T - p) + x_T' Q_v x_T + sum_t u_t' R u_t`
//! over the zero-order-hold double integrator.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Desirability;
use crate::Vec2;

pub type State = Vector4<f64>;

/// Shortest reach distance worth planning, cm.
pub const MIN_REACH: f64 = 0.1;

const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub q_p: f64,
    pub q_v: f64,
    pub r: f64,
    /// Nominal reach speed used to size horizons, cm/s.
    pub v_nom: f64,
    /// Braking gain applied when no controller is active, 1/s.
    pub k_brake: f64,
    pub min_horizon_steps: usize,
    pub max_horizon_steps: usize,
    /// Target displacement that forces a re-plan, cm.
    pub replan_distance: f64,
    /// Follow the winner's controller alone instead of the weighted blend.
    pub wta_only: bool,
    pub dt: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            q_p: 1e4,
            q_v: 1e2,
            r: 1e-2,
            v_nom: 12.5,
            k_brake: 5.0,
            min_horizon_steps: 50,
            max_horizon_steps: 3600,
            replan_distance: 0.5,
            wta_only: false,
            dt: 0.01,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.into()));
        if !(self.q_p >= 0.0 && self.q_v >= 0.0 && self.r > 0.0) {
            return bad("costs must satisfy q_p >= 0, q_v >= 0, r > 0");
        }
        if !(self.v_nom > 0.0 && self.dt > 0.0 && self.k_brake >= 0.0) {
            return bad("v_nom and dt must be positive, k_brake non-negative");
        }
        if self.min_horizon_steps > self.max_horizon_steps || self.max_horizon_steps < 2 {
            return bad("horizon bounds are inconsistent");
        }
        if !(self.replan_distance > 0.0) {
            return bad("replan_distance must be positive");
        }
        Ok(())
    }

    /// Horizon in steps for a reach of `r` cm.
    pub fn horizon_steps(&self, r: f64) -> usize {
        // The small offset keeps exact multiples from rounding up a step.
        let raw = libm::ceil(r / self.v_nom / self.dt - 1e-9);
        let lo = self.min_horizon_steps.max(2);
        (raw.max(0.0) as usize).clamp(lo, self.max_horizon_steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyProblem {
    pub a: Matrix4<f64>,
    pub b: Matrix4x2<f64>,
    /// Terminal position weight.
    pub q_pos: Matrix2<f64>,
    /// Terminal velocity weight.
    pub q_vel: Matrix2<f64>,
    pub r: Matrix2<f64>,
    /// Position selector.
    pub d: Matrix2x4<f64>,
    pub target: Vec2,
    pub horizon: usize,
    pub dt: f64,
}

/// Exact discretisation of the unit-mass double integrator.
pub fn double_integrator(dt: f64) -> (Matrix4<f64>, Matrix4x2<f64>) {
    let mut a = Matrix4::identity();
    a[(0, 2)] = dt;
    a[(1, 3)] = dt;
    let mut b = Matrix4x2::zeros();
    b[(0, 0)] = dt * dt / 2.0;
    b[(1, 1)] = dt * dt / 2.0;
    b[(2, 0)] = dt;
    b[(3, 1)] = dt;
    (a, b)
}

fn selector() -> Matrix2x4<f64> {
    let mut d = Matrix2x4::zeros();
    d[(0, 0)] = 1.0;
    d[(1, 1)] = 1.0;
    d
}

impl PolicyProblem {
    pub fn tracking(target: Vec2, horizon: usize, cfg: &ControllerConfig) -> Self {
        let (a, b) = double_integrator(cfg.dt);
        PolicyProblem {
            a,
            b,
            q_pos: Matrix2::identity() * cfg.q_p,
            q_vel: Matrix2::identity() * cfg.q_v,
            r: Matrix2::identity() * cfg.r,
            d: selector(),
            target,
            horizon,
            dt: cfg.dt,
        }
    }

    /// The full 4×4 terminal weight `D' Q_p D + diag(0, Q_v)`.
    pub fn q_terminal(&self) -> Matrix4<f64> {
        let mut q = self.d.transpose() * self.q_pos * self.d;
        let mut vel = q.fixed_view_mut::<2, 2>(2, 2);
        vel += self.q_vel;
        q
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.into()));
        if self.horizon < 2 {
            return bad("horizon must be at least 2");
        }
        let sym = |m: &Matrix2<f64>| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
        if !sym(&self.q_pos) || !sym(&self.q_vel) || !sym(&self.r) {
            return bad("cost matrices must be symmetric");
        }
        if self.q_pos.symmetric_eigenvalues().min() < 0.0 || self.q_vel.symmetric_eigenvalues().min() < 0.0 {
            return bad("terminal weights must be positive semidefinite");
        }
        if self.r.cholesky().is_none() {
            return bad("control weight must be positive definite");
        }
        Ok(())
    }
}

/// Problem for the controller of a neuron preferring `dir_deg`, reaching
/// distance `r` from the current state.
pub fn make_problem(x: &State, dir_deg: f64, r: f64, cfg: &ControllerConfig) -> Result<PolicyProblem> {
    if !(r >= MIN_REACH) {
        return Err(Error::DegenerateReach { r });
    }
    let phi = dir_deg.to_radians();
    let target = Vec2::new(x[0], x[1]) + Vec2::new(libm::cos(phi), libm::sin(phi)) * r;
    Ok(PolicyProblem::tracking(target, cfg.horizon_steps(r), cfg))
}

/// Time-indexed affine feedback law with its quadratic cost-to-go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachPolicy {
    /// `gains[t - 1]` is `L_t` for `t` in `1..horizon`.
    pub gains: Vec<Matrix2x4<f64>>,
    pub feedforward: Vec<Vector2<f64>>,
    /// `V_t(x) = x' P_t x - 2 s_t' x + c_t` for `t` in `1..=horizon`.
    pub p: Vec<Matrix4<f64>>,
    pub s: Vec<Vector4<f64>>,
    pub c: Vec<f64>,
    pub horizon: usize,
}

fn condition_sym2(m: &Matrix2<f64>) -> f64 {
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn solve_policy(prob: &PolicyProblem) -> Result<ReachPolicy> {
    prob.validate()?;
    let n = prob.horizon;
    let (a, b) = (prob.a, prob.b);
    let qp = prob.q_pos;
    let mut p = prob.q_terminal();
    let mut s = prob.d.transpose() * qp * prob.target;
    let mut c = prob.target.dot(&(qp * prob.target));

    let mut gains = Vec::with_capacity(n - 1);
    let mut ff = Vec::with_capacity(n - 1);
    let mut ps = Vec::with_capacity(n);
    let mut ss = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    ps.push(p);
    ss.push(s);
    cs.push(c);
    for step in (1..n).rev() {
        let g = prob.r + b.transpose() * p * b;
        let g = (g + g.transpose()) * 0.5;
        let cond = condition_sym2(&g);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { step, cond });
        }
        let g_inv = g.try_inverse().ok_or(Error::IllConditioned { step, cond })?;
        let l_mat = g_inv * b.transpose() * p * a;
        let l_vec = g_inv * b.transpose() * s;
        let closed = a - b * l_mat;
        s = closed.transpose() * s;
        c -= l_vec.dot(&(g * l_vec));
        p = a.transpose() * p * closed;
        p = (p + p.transpose()) * 0.5;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned { step, cond: f64::INFINITY });
        }
        gains.push(l_mat);
        ff.push(l_vec);
        ps.push(p);
        ss.push(s);
        cs.push(c);
    }
    gains.reverse();
    ff.reverse();
    ps.reverse();
    ss.reverse();
    cs.reverse();
    Ok(ReachPolicy { gains, feedforward: ff, p: ps, s: ss, c: cs, horizon: n })
}

impl ReachPolicy {
    pub fn last_step(&self) -> usize {
        self.horizon - 1
    }

    /// Optimal cost-to-go from `x` at step `t`, `1 <= t <= horizon`.
    pub fn cost_to_go(&self, x: &State, t: usize) -> Result<f64> {
        if t < 1 || t > self.horizon {
            return Err(Error::HorizonExceeded { t, last: self.horizon });
        }
        let i = t - 1;
        Ok(x.dot(&(self.p[i] * x)) - 2.0 * self.s[i].dot(x) + self.c[i])
    }
}

/// `u = -L_t x + l_t` for `1 <= t <= horizon - 1`.
pub fn eval_policy(policy: &ReachPolicy, x: &State, t: usize) -> Result<Vector2<f64>> {
    if t < 1 || t > policy.last_step() {
        return Err(Error::HorizonExceeded { t, last: policy.last_step() });
    }
    Ok(-policy.gains[t - 1] * x + policy.feedforward[t - 1])
}

/// One activated controller.
#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub policy: ReachPolicy,
    /// Tick at which the policy's step 1 applies.
    pub start_tick: u64,
    /// World position of the beacon the plan aims at.
    pub beacon_pos: Vec2,
    pub track_id: Option<u32>,
}

impl BankEntry {
    pub fn step_at(&self, tick: u64) -> usize {
        (tick - self.start_tick) as usize + 1
    }

    pub fn expired(&self, tick: u64) -> bool {
        tick < self.start_tick || self.step_at(tick) > self.policy.last_step()
    }
}

/// Controllers keyed by neuron index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyBank {
    pub entries: BTreeMap<usize, BankEntry>,
}

impl PolicyBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn neurons(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    /// Drops every controller whose neuron is not in `active`.
    pub fn retain_active(&mut self, active: &[usize]) {
        self.entries.retain(|j, _| active.binary_search(j).is_ok());
    }
}

/// Desirability-weighted sum of the active controllers' commands, or the
/// braking law `-k_brake v` when nothing is active.
pub fn blend_commands(bank: &PolicyBank, d: &Desirability, x: &State, tick: u64, k_brake: f64) -> Result<Vector2<f64>> {
    if d.active_set.is_empty() {
        return Ok(-Vector2::new(x[2], x[3]) * k_brake);
    }
    let mut u = Vector2::zeros();
    for &j in &d.active_set {
        if let Some(e) = bank.entries.get(&j) {
            u += eval_policy(&e.policy, x, e.step_at(tick))? * d.d[j];
        }
    }
    Ok(u)
}

/// Command of a single controller, used for winner-take-all mode.
pub fn winner_command(bank: &PolicyBank, winner: usize, x: &State, tick: u64) -> Result<Vector2<f64>> {
    match bank.entries.get(&winner) {
        Some(e) => eval_policy(&e.policy, x, e.step_at(tick)),
        None => Ok(Vector2::zeros()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rest(x: f64, y: f64) -> State {
        State::new(x, y, 0.0, 0.0)
    }

    /// Rolls the problem's own linear model forward under the policy.
    fn rollout(prob: &PolicyProblem, pol: &ReachPolicy, x0: State) -> (Vec<State>, Vec<Vector2<f64>>) {
        let mut xs = vec![x0];
        let mut us = Vec::new();
        let mut x = x0;
        for t in 1..prob.horizon {
            let u = eval_policy(pol, &x, t).unwrap();
            x = prob.a * x + prob.b * u;
            xs.push(x);
            us.push(u);
        }
        (xs, us)
    }

    fn total_cost(prob: &PolicyProblem, xs: &[State], us: &[Vector2<f64>]) -> f64 {
        let xt = xs.last().unwrap();
        let e = prob.d * xt - prob.target;
        let v = Vector2::new(xt[2], xt[3]);
        e.dot(&(prob.q_pos * e)) + v.dot(&(prob.q_vel * v)) + us.iter().map(|u| u.dot(&(prob.r * u))).sum::<f64>()
    }

    #[test]
    fn make_problem_targets() {
        let cfg = ControllerConfig::default();
        let p = make_problem(&rest(0.0, 0.0), 0.0, 10.0, &cfg).unwrap();
        assert!((p.target - Vec2::new(10.0, 0.0)).norm() < 1e-12);
        let p = make_problem(&rest(0.0, 0.0), 90.0, 35.0, &cfg).unwrap();
        assert!((p.target - Vec2::new(0.0, 35.0)).norm() < 1e-12);
        assert!(matches!(make_problem(&rest(0.0, 0.0), 0.0, 0.05, &cfg), Err(Error::DegenerateReach { .. })));
    }

    #[test]
    fn horizon_arithmetic() {
        let cfg = ControllerConfig { min_horizon_steps: 2, ..Default::default() };
        assert_eq!(cfg.horizon_steps(31.0), 248);
        assert_eq!(cfg.horizon_steps(0.01), 2);
        assert_eq!(cfg.horizon_steps(1e6), cfg.max_horizon_steps);
        assert_eq!(ControllerConfig::default().horizon_steps(31.0), 248);
        assert_eq!(ControllerConfig::default().horizon_steps(1.0), 50);
    }

    #[test]
    fn discretisation_is_exact_for_constant_accel() {
        let dt = 0.01;
        let (a, b) = double_integrator(dt);
        let mut x = State::new(1.0, 2.0, 3.0, -1.0);
        let u = Vector2::new(4.0, -2.0);
        let n = 37;
        for _ in 0..n {
            x = a * x + b * u;
        }
        let t = n as f64 * dt;
        assert!((x[0] - (1.0 + 3.0 * t + 2.0 * t * t)).abs() < 1e-12);
        assert!((x[3] - (-1.0 - 2.0 * t)).abs() < 1e-12);
    }

    #[test]
    fn policy_lengths() {
        let cfg = ControllerConfig::default();
        let prob = PolicyProblem::tracking(Vec2::new(5.0, 5.0), 60, &cfg);
        let pol = solve_policy(&prob).unwrap();
        assert_eq!(pol.gains.len(), 59);
        assert_eq!(pol.feedforward.len(), 59);
        assert_eq!(pol.p.len(), 60);
        assert!(matches!(eval_policy(&pol, &rest(0.0, 0.0), 0), Err(Error::HorizonExceeded { .. })));
        assert!(matches!(eval_policy(&pol, &rest(0.0, 0.0), 60), Err(Error::HorizonExceeded { .. })));
        eval_policy(&pol, &rest(0.0, 0.0), 59).unwrap();
    }

    #[test]
    fn at_goal_stays_put() {
        let cfg = ControllerConfig::default();
        let x0 = rest(12.0, 7.0);
        let prob = PolicyProblem::tracking(Vec2::new(12.0, 7.0), 100, &cfg);
        let pol = solve_policy(&prob).unwrap();
        let (xs, us) = rollout(&prob, &pol, x0);
        assert!(us.iter().all(|u| u.norm() <= 1e-6));
        let last = xs.last().unwrap();
        assert!((prob.d * last - prob.target).norm() <= 1e-9);
    }

    #[test]
    fn mirrored_state_mirrored_command() {
        let cfg = ControllerConfig::default();
        let flip = |x: &State| State::new(x[0], -x[1], x[2], -x[3]);
        let prob = PolicyProblem::tracking(Vec2::new(20.0, 8.0), 120, &cfg);
        let mprob = PolicyProblem::tracking(Vec2::new(20.0, -8.0), 120, &cfg);
        let pol = solve_policy(&prob).unwrap();
        let mpol = solve_policy(&mprob).unwrap();
        let x = State::new(3.0, 1.5, 2.0, 0.7);
        for t in [1, 30, 119] {
            let u = eval_policy(&pol, &x, t).unwrap();
            let mu = eval_policy(&mpol, &flip(&x), t).unwrap();
            assert!((u[0] - mu[0]).abs() <= 1e-9 * u.norm().max(1.0));
            assert!((u[1] + mu[1]).abs() <= 1e-9 * u.norm().max(1.0));
        }
    }

    #[test]
    fn first_command_points_at_target() {
        let cfg = ControllerConfig::default();
        let prob = make_problem(&rest(0.0, 0.0), 0.0, 10.0, &cfg).unwrap();
        let pol = solve_policy(&prob).unwrap();
        let u = eval_policy(&pol, &rest(0.0, 0.0), 1).unwrap();
        assert!(u[0] > 0.0);
        assert!(libm::atan2(u[1], u[0]).abs().to_degrees() < 1.0);
    }

    #[test]
    fn heavier_control_cost_trades_accuracy_for_energy() {
        let cfg = ControllerConfig::default();
        let heavy = ControllerConfig { r: cfg.r * 10.0, ..cfg };
        let target = Vec2::new(27.0, 35.0);
        let x0 = rest(0.0, 0.0);
        let run = |c: &ControllerConfig| {
            let prob = PolicyProblem::tracking(target, c.horizon_steps(target.norm()), c);
            let pol = solve_policy(&prob).unwrap();
            let (xs, us) = rollout(&prob, &pol, x0);
            let err = (prob.d * xs.last().unwrap() - target).norm();
            let energy: f64 = us.iter().map(|u| u.norm_squared()).sum();
            (err, energy)
        };
        let (e1, w1) = run(&cfg);
        let (e2, w2) = run(&heavy);
        assert!(e2 >= e1);
        assert!(w2 < w1);
    }

    #[test]
    fn cost_to_go_matches_rollout_and_decreases() {
        let cfg = ControllerConfig::default();
        let prob = PolicyProblem::tracking(Vec2::new(-10.0, 22.0), 180, &cfg);
        let pol = solve_policy(&prob).unwrap();
        let x0 = State::new(1.0, 1.0, 2.0, -1.0);
        let (xs, us) = rollout(&prob, &pol, x0);
        let v1 = pol.cost_to_go(&x0, 1).unwrap();
        let direct = total_cost(&prob, &xs, &us);
        assert!((v1 - direct).abs() <= 1e-8 * direct.max(1.0));
        for t in 1..prob.horizon {
            let a = pol.cost_to_go(&xs[t - 1], t).unwrap();
            let b = pol.cost_to_go(&xs[t], t + 1).unwrap();
            assert!(b <= a + 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn noiseless_reach_is_accurate() {
        // Closed loop: when a horizon runs out the controller is re-planned
        // from the current state toward the same target.
        let cfg = ControllerConfig::default();
        for &(x, y) in &[(27.0, 35.0), (52.0, 47.0), (1.0, 0.5), (40.0, 2.0), (0.5, 46.0)] {
            let target = Vec2::new(x, y);
            let mut state = rest(0.0, 0.0);
            let mut peak: f64 = 0.0;
            for round in 0..3 {
                let r = (Vec2::new(state[0], state[1]) - target).norm();
                let horizon = if round == 0 { cfg.horizon_steps(r) } else { cfg.min_horizon_steps };
                let prob = PolicyProblem::tracking(target, horizon, &cfg);
                let pol = solve_policy(&prob).unwrap();
                let (xs, _) = rollout(&prob, &pol, state);
                peak = xs.iter().map(|s| Vector2::new(s[2], s[3]).norm()).fold(peak, f64::max);
                state = *xs.last().unwrap();
            }
            let err = (Vec2::new(state[0], state[1]) - target).norm();
            let sp = Vector2::new(state[2], state[3]).norm();
            assert!(err <= 0.1 && sp <= 0.1, "({x},{y}) err {err} speed {sp}");
            assert!(peak < crate::MAX_SPEED, "peak {peak}");
        }
    }

    #[test]
    fn ill_conditioned_detected() {
        let cfg = ControllerConfig::default();
        let mut prob = PolicyProblem::tracking(Vec2::new(1.0, 1.0), 10, &cfg);
        prob.r = Matrix2::new(1e-14, 0.0, 0.0, 1e3);
        prob.q_pos = Matrix2::zeros();
        prob.q_vel = Matrix2::zeros();
        assert!(matches!(solve_policy(&prob), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn invalid_problems_rejected() {
        let cfg = ControllerConfig::default();
        let mut prob = PolicyProblem::tracking(Vec2::new(1.0, 1.0), 1, &cfg);
        assert!(solve_policy(&prob).is_err());
        prob.horizon = 10;
        prob.r = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        assert!(solve_policy(&prob).is_err());
    }

    fn bank_with(entries: &[(usize, Vec2)], cfg: &ControllerConfig) -> PolicyBank {
        let mut bank = PolicyBank::new();
        for &(j, target) in entries {
            let prob = PolicyProblem::tracking(target, 100, cfg);
            bank.entries.insert(
                j,
                BankEntry { policy: solve_policy(&prob).unwrap(), start_tick: 0, beacon_pos: target, track_id: None },
            );
        }
        bank
    }

    #[test]
    fn blend_single_controller_exact() {
        let cfg = ControllerConfig::default();
        let bank = bank_with(&[(40, Vec2::new(10.0, 9.0))], &cfg);
        let mut d = Desirability { d: vec![0.0; 181], active_set: vec![40] };
        d.d[40] = 1.0;
        let x = State::new(1.0, 2.0, 0.5, 0.0);
        let u = blend_commands(&bank, &d, &x, 5, cfg.k_brake).unwrap();
        let direct = eval_policy(&bank.entries[&40].policy, &x, 6).unwrap();
        assert_eq!(u, direct);
    }

    #[test]
    fn blend_opposite_commands_cancel() {
        let cfg = ControllerConfig::default();
        let bank = bank_with(&[(0, Vec2::new(10.0, 0.0)), (180, Vec2::new(-10.0, 0.0))], &cfg);
        let mut d = Desirability { d: vec![0.0; 181], active_set: vec![0, 180] };
        d.d[0] = 0.5;
        d.d[180] = 0.5;
        let u = blend_commands(&bank, &d, &rest(0.0, 0.0), 0, cfg.k_brake).unwrap();
        assert!(u.norm() < 1e-9);
    }

    #[test]
    fn empty_set_brakes() {
        let d = Desirability { d: vec![0.0; 181], active_set: vec![] };
        let u = blend_commands(&PolicyBank::new(), &d, &State::new(0.0, 0.0, 10.0, 0.0), 0, 5.0).unwrap();
        assert_eq!(u, Vector2::new(-50.0, 0.0));
    }

    #[test]
    fn certainty_equivalence() {
        // The noise level never enters the recursion; solving twice gives the
        // same bits.
        let cfg = ControllerConfig::default();
        let prob = PolicyProblem::tracking(Vec2::new(3.0, 30.0), 200, &cfg);
        assert_eq!(solve_policy(&prob).unwrap(), solve_policy(&prob.clone()).unwrap());
    }
}
