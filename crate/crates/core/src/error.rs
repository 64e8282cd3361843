use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("calibration points are collinear (|det| = {det:e})")]
    CollinearPoints { det: f64 },
    #[error("point ({x}, {y}) lies outside the calibrated frame")]
    OutOfFrame { x: f64, y: f64 },
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("clock went backwards: now {now} < t_vis {t_vis}")]
    ClockRegression { now: f64, t_vis: f64 },

    #[error("target direction {direction_deg:.2} deg is outside the field")]
    TargetBehindField { direction_deg: f64 },
    #[error("field activity diverged (|u| = {magnitude:e} at neuron {neuron})")]
    NumericalBlowup { neuron: usize, magnitude: f64 },
    #[error("invalid field parameters: {0}")]
    InvalidFieldParams(String),

    #[error("reach distance {r} cm is below the minimum")]
    DegenerateReach { r: f64 },
    #[error("Riccati recursion is ill-conditioned (cond = {cond:e} at step {step})")]
    IllConditioned { step: usize, cond: f64 },
    #[error("policy step {t} outside horizon 1..={last}")]
    HorizonExceeded { t: usize, last: usize },
    #[error("invalid policy problem: {0}")]
    InvalidProblem(String),

    #[error("terminal time must be positive, got {0}")]
    NonpositiveHorizon(f64),
    #[error("time {t} outside profile horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("path is degenerate (all points coincide)")]
    DegeneratePath,
    #[error("samples are not uniformly spaced in time")]
    NonuniformSampling,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
