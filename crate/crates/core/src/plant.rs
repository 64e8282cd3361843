//! Planar point-mass end effector.

use serde::{Deserialize, Serialize};

use crate::control::State;
use crate::{Vec2, MAX_SPEED};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub p: Vec2,
    pub v: Vec2,
    pub t: f64,
}

impl Default for PlantState {
    fn default() -> Self {
        PlantState { p: Vec2::zeros(), v: Vec2::zeros(), t: 0.0 }
    }
}

impl PlantState {
    pub fn as_state(&self) -> State {
        State::new(self.p.x, self.p.y, self.v.x, self.v.y)
    }

    pub fn speed(&self) -> f64 {
        self.v.norm()
    }
}

pub fn clamp_speed(v: Vec2, max: f64) -> Vec2 {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

/// Semi-implicit Euler step with the arm's speed limit.
pub fn plant_step(s: &PlantState, u: Vec2, dt: f64) -> PlantState {
    let v = clamp_speed(s.v + u * dt, MAX_SPEED);
    PlantState { p: s.p + v * dt, v, t: s.t + dt }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_rest_stays() {
        let s = PlantState { p: Vec2::new(3.0, 4.0), ..Default::default() };
        let n = plant_step(&s, Vec2::zeros(), 0.01);
        assert_eq!(n.p, s.p);
        assert_eq!(n.v, s.v);
        assert_eq!(n.t, 0.01);
    }

    #[test]
    fn constant_accel_step() {
        let n = plant_step(&PlantState::default(), Vec2::new(100.0, 0.0), 0.01);
        assert!((n.v - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((n.p - Vec2::new(0.01, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn saturates_at_max_speed() {
        let n = plant_step(&PlantState::default(), Vec2::new(1e9, -3e8), 0.01);
        assert!((n.speed() - MAX_SPEED).abs() < 1e-12);
        assert!(n.speed() <= MAX_SPEED);
    }
}
