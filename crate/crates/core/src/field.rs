//! The 181-neuron reach planning field and its input fields.
//!
//! Neuron `j` prefers the egocentric movement direction `j` degrees. The field
//! follows lattice Amari dynamics with a difference-of-Gaussians lateral
//! kernel, global inhibition and a logistic output function.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

pub const NEURONS: usize = 181;

/// Directions within this many degrees outside `[0, 180]` are clamped onto
/// the field instead of rejected.
pub const DIRECTION_SLACK_DEG: f64 = 5.0;

const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldParams {
    pub tau: f64,
    pub h: f64,
    pub theta_init: f64,
    pub dt: f64,
    pub noise_sigma: f64,
    pub exc_amp: f64,
    pub exc_sigma: f64,
    pub inh_amp: f64,
    pub inh_sigma: f64,
    pub global_inh: f64,
    pub beta: f64,
    pub u_f: f64,
    pub sensory_amp: f64,
    pub outcome_amp: f64,
    pub cost_amp: f64,
    /// Width of the sensory, outcome and cost bumps, degrees.
    pub input_sigma: f64,
    pub pause_amp: f64,
    pub pause_tau: f64,
    pub seed: u64,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            tau: 0.1,
            h: -1.0,
            theta_init: 0.5,
            dt: 0.01,
            noise_sigma: 0.05,
            exc_amp: 1.0,
            exc_sigma: 5.0,
            inh_amp: 0.5,
            inh_sigma: 12.5,
            global_inh: 0.3,
            beta: 4.0,
            u_f: 0.0,
            sensory_amp: 0.9,
            outcome_amp: 0.3,
            cost_amp: 0.4,
            input_sigma: 5.0,
            pause_amp: 5.0,
            pause_tau: 0.05,
            seed: 0,
        }
    }
}

impl FieldParams {
    pub fn noiseless() -> Self {
        FieldParams { noise_sigma: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidFieldParams(m.into()));
        let all = [
            self.tau,
            self.h,
            self.theta_init,
            self.dt,
            self.noise_sigma,
            self.exc_amp,
            self.exc_sigma,
            self.inh_amp,
            self.inh_sigma,
            self.global_inh,
            self.beta,
            self.u_f,
            self.sensory_amp,
            self.outcome_amp,
            self.cost_amp,
            self.input_sigma,
            self.pause_amp,
            self.pause_tau,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.tau <= 0.0 || self.dt <= 0.0 {
            return bad("tau and dt must be positive");
        }
        if self.dt > self.tau / 5.0 {
            return bad("dt must not exceed tau/5");
        }
        if self.theta_init <= self.h {
            return bad("theta_init must exceed h");
        }
        if self.exc_sigma <= 0.0 || self.inh_sigma <= 0.0 || self.input_sigma <= 0.0 {
            return bad("kernel and input widths must be positive");
        }
        if self.noise_sigma < 0.0 || self.pause_tau <= 0.0 {
            return bad("noise_sigma must be non-negative and pause_tau positive");
        }
        Ok(())
    }
}

/// Per-source input vectors, one value per neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldInputs {
    pub sensory: Vec<f64>,
    pub outcome: Vec<f64>,
    pub cost: Vec<f64>,
    pub pause: Vec<f64>,
}

impl Default for FieldInputs {
    fn default() -> Self {
        FieldInputs {
            sensory: vec![0.0; NEURONS],
            outcome: vec![0.0; NEURONS],
            cost: vec![0.0; NEURONS],
            pause: vec![0.0; NEURONS],
        }
    }
}

impl FieldInputs {
    pub fn total(&self, j: usize) -> f64 {
        self.sensory[j] + self.outcome[j] + self.cost[j] + self.pause[j]
    }

    /// Inputs reflected about neuron 90.
    pub fn mirrored(&self) -> Self {
        let flip = |v: &Vec<f64>| v.iter().rev().copied().collect();
        FieldInputs {
            sensory: flip(&self.sensory),
            outcome: flip(&self.outcome),
            cost: flip(&self.cost),
            pause: flip(&self.pause),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub inputs: FieldInputs,
    pub t: f64,
}

impl FieldState {
    pub fn resting(params: &FieldParams) -> Self {
        FieldState { u: vec![params.h; NEURONS], inputs: FieldInputs::default(), t: 0.0 }
    }
}

/// A target as seen from the end effector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCue {
    pub direction_deg: f64,
    /// Distance from the end effector, cm.
    pub distance: f64,
}

/// Egocentric direction from `from` to `to` in degrees, mapped onto the
/// field's `[0, 180]` range.
pub fn egocentric_direction(from: Vec2, to: Vec2) -> Result<f64> {
    let d = to - from;
    let mut th = libm::atan2(d.y, d.x).to_degrees();
    if th < -90.0 {
        th += 360.0;
    }
    if th < -DIRECTION_SLACK_DEG || th > 180.0 + DIRECTION_SLACK_DEG {
        return Err(Error::TargetBehindField { direction_deg: th });
    }
    Ok(th.clamp(0.0, 180.0))
}

fn gaussian(x: f64, sigma: f64) -> f64 {
    libm::exp(-x * x / (2.0 * sigma * sigma))
}

/// Builds the four input vectors.
///
/// `stop_elapsed` is the time since the earliest currently visible stop cue
/// appeared, or `None` when no stop cue is visible. `diag` is the workspace
/// diagonal used to normalise reach cost.
pub fn compose_inputs(targets: &[TargetCue], stop_elapsed: Option<f64>, diag: f64, params: &FieldParams) -> FieldInputs {
    let mut inputs = FieldInputs::default();
    for cue in targets {
        let cost_amp = -params.cost_amp * (cue.distance / diag);
        for j in 0..NEURONS {
            let g = gaussian(j as f64 - cue.direction_deg, params.input_sigma);
            inputs.sensory[j] += params.sensory_amp * g;
            inputs.outcome[j] += params.outcome_amp * g;
            inputs.cost[j] += cost_amp * g;
        }
    }
    if let Some(el) = stop_elapsed {
        let level = -params.pause_amp * (1.0 - libm::exp(-el.max(0.0) / params.pause_tau));
        inputs.pause.fill(level);
    }
    inputs
}

/// Field parameters together with the precomputed lateral kernel.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub params: FieldParams,
    /// `kernel[d + 180]` is the weight between neurons `d` degrees apart.
    kernel: Vec<f64>,
}

impl FieldModel {
    pub fn new(params: FieldParams) -> Result<Self> {
        params.validate()?;
        let kernel = (0..2 * NEURONS - 1)
            .map(|i| {
                let d = i as f64 - (NEURONS - 1) as f64;
                params.exc_amp * gaussian(d, params.exc_sigma) - params.inh_amp * gaussian(d, params.inh_sigma)
                    - params.global_inh
            })
            .collect();
        Ok(FieldModel { params, kernel })
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.kernel[i + NEURONS - 1 - j]
    }

    pub fn output(&self, u: f64) -> f64 {
        1.0 / (1.0 + libm::exp(-self.params.beta * (u - self.params.u_f)))
    }

    /// Lateral input to neuron `i`. Terms are summed in mirror pairs
    /// `(j, 180 - j)` so that reflected activity gives bitwise reflected input.
    fn lateral(&self, i: usize, out: &[f64]) -> f64 {
        let mid = NEURONS / 2;
        let mut acc = self.weight(i, mid) * out[mid];
        for j in 0..mid {
            let k = NEURONS - 1 - j;
            acc += self.weight(i, j) * out[j] + self.weight(i, k) * out[k];
        }
        acc
    }

    /// One Euler step with caller-supplied standard normal draws.
    pub fn step_with_noise(&self, state: &FieldState, inputs: &FieldInputs, draws: &[f64]) -> Result<FieldState> {
        debug_assert_eq!(draws.len(), NEURONS);
        let p = &self.params;
        let out: Vec<f64> = state.u.iter().map(|&u| self.output(u)).collect();
        let sigma = p.noise_sigma * libm::sqrt(p.dt);
        let mut u = Vec::with_capacity(NEURONS);
        for i in 0..NEURONS {
            let lateral = self.lateral(i, &out);
            let du = (-state.u[i] + p.h + inputs.total(i) + lateral) * (p.dt / p.tau);
            let next = state.u[i] + du + sigma * draws[i];
            if !next.is_finite() || next.abs() > BLOWUP_LIMIT {
                return Err(Error::NumericalBlowup { neuron: i, magnitude: next.abs() });
            }
            u.push(next);
        }
        Ok(FieldState { u, inputs: inputs.clone(), t: state.t + p.dt })
    }

    pub fn step<R: Rng + ?Sized>(&self, state: &FieldState, inputs: &FieldInputs, rng: &mut R) -> Result<FieldState> {
        let draws: Vec<f64> = (0..NEURONS).map(|_| rng.sample(StandardNormal)).collect();
        self.step_with_noise(state, inputs, &draws)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Desirability {
    pub d: Vec<f64>,
    pub active_set: Vec<usize>,
}

impl Desirability {
    /// `(neuron, weight)` pairs for the active set.
    pub fn sparse(&self) -> Vec<(usize, f64)> {
        self.active_set.iter().map(|&j| (j, self.d[j])).collect()
    }
}

pub fn desirability(u: &[f64], theta_init: f64) -> Desirability {
    let active_set: Vec<usize> = (0..u.len()).filter(|&j| u[j] > theta_init).collect();
    let mut d = vec![0.0; u.len()];
    let total: f64 = active_set.iter().map(|&j| u[j] - theta_init).sum();
    for &j in &active_set {
        d[j] = (u[j] - theta_init) / total;
    }
    Desirability { d, active_set }
}

pub fn winner(u: &[f64], theta_init: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &v) in u.iter().enumerate() {
        if v > theta_init && best.is_none_or(|b| v > u[b]) {
            best = Some(j);
        }
    }
    best
}
