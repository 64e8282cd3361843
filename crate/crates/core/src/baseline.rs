//! Cubic time-scaled straight-line trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicProfile {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub t_final: f64,
    pub start: Vec2,
    pub goal: Vec2,
}

/// Rest-to-rest cubic time scaling `s(t) = a2 t^2 + a3 t^3` on `[0, T]`.
pub fn cubic_coeffs(t_final: f64) -> Result<(f64, f64, f64, f64)> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::NonpositiveHorizon(t_final));
    }
    Ok((0.0, 0.0, 3.0 / (t_final * t_final), -2.0 / (t_final * t_final * t_final)))
}

impl CubicProfile {
    pub fn new(start: Vec2, goal: Vec2, t_final: f64) -> Result<Self> {
        let (a0, a1, a2, a3) = cubic_coeffs(t_final)?;
        Ok(CubicProfile { a0, a1, a2, a3, t_final, start, goal })
    }

    pub fn s(&self, t: f64) -> f64 {
        self.a0 + t * (self.a1 + t * (self.a2 + t * self.a3))
    }

    pub fn s_dot(&self, t: f64) -> f64 {
        self.a1 + t * (2.0 * self.a2 + 3.0 * t * self.a3)
    }

    pub fn s_ddot(&self, t: f64) -> f64 {
        2.0 * self.a2 + 6.0 * t * self.a3
    }

    pub fn peak_speed(&self) -> f64 {
        1.5 * (self.goal - self.start).norm() / self.t_final
    }
}

/// Position and velocity at time `t`, `0 <= t <= T`.
pub fn sample_trajectory(profile: &CubicProfile, t: f64) -> Result<(Vec2, Vec2)> {
    if !(0.0..=profile.t_final).contains(&t) {
        return Err(Error::OutOfHorizon { t, horizon: profile.t_final });
    }
    let delta = profile.goal - profile.start;
    Ok((profile.start + delta * profile.s(t), delta * profile.s_dot(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_coefficients() {
        assert_eq!(cubic_coeffs(2.0).unwrap(), (0.0, 0.0, 0.75, -0.25));
        assert_eq!(cubic_coeffs(1.0).unwrap(), (0.0, 0.0, 3.0, -2.0));
        assert!(matches!(cubic_coeffs(0.0), Err(Error::NonpositiveHorizon(_))));
        assert!(matches!(cubic_coeffs(-1.0), Err(Error::NonpositiveHorizon(_))));
    }

    #[test]
    fn endpoints_and_midpoint() {
        let start = Vec2::zeros();
        let goal = Vec2::new(27.0, 35.0);
        let prof = CubicProfile::new(start, goal, 3.0).unwrap();
        let (p0, v0) = sample_trajectory(&prof, 0.0).unwrap();
        assert_eq!(p0, start);
        assert_eq!(v0, Vec2::zeros());
        let (p1, v1) = sample_trajectory(&prof, 3.0).unwrap();
        assert!((p1 - goal).norm() < 1e-12);
        assert!(v1.norm() < 1e-12);
        let (pm, vm) = sample_trajectory(&prof, 1.5).unwrap();
        assert!((pm - Vec2::new(13.5, 17.5)).norm() < 1e-12);
        assert!((vm.norm() - prof.peak_speed()).abs() < 1e-9);
        assert!(matches!(sample_trajectory(&prof, 3.1), Err(Error::OutOfHorizon { .. })));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn boundary_conditions(t in 0.05f64..40.0) {
            let p = CubicProfile::new(Vec2::zeros(), Vec2::new(1.0, 0.0), t).unwrap();
            prop_assert!(p.s(0.0).abs() <= 1e-12);
            prop_assert!((p.s(t) - 1.0).abs() <= 1e-12);
            prop_assert!(p.s_dot(0.0).abs() <= 1e-12);
            prop_assert!(p.s_dot(t).abs() * t <= 1e-12);
            prop_assert!((p.s(t / 2.0) - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn peak_speed_at_midpoint(t in 0.5f64..20.0, gx in -40.0f64..40.0, gy in -40.0f64..40.0) {
            let goal = Vec2::new(gx, gy);
            prop_assume!(goal.norm() > 1e-3);
            let p = CubicProfile::new(Vec2::zeros(), goal, t).unwrap();
            let (_, v) = sample_trajectory(&p, t / 2.0).unwrap();
            prop_assert!((v.norm() - 1.5 * goal.norm() / t).abs() <= 1e-9);
            for k in 0..=50 {
                let (_, vk) = sample_trajectory(&p, (t * k as f64 / 50.0).min(t)).unwrap();
                prop_assert!(vk.norm() <= v.norm() + 1e-12);
            }
        }
    }
}
