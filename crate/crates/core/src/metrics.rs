//! Trajectory quality measures.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: libm::sqrt(var) }
    }
}

pub fn path_length(samples: &[Vec2]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    Ok(samples.windows(2).map(|w| (w[1] - w[0]).norm()).sum())
}

/// Population covariance entries `(sxx, syy, sxy)`.
fn covariance(samples: &[Vec2]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().fold(Vec2::zeros(), |a, p| a + p) / n;
    let mut c = (0.0, 0.0, 0.0);
    for p in samples {
        let d = p - mean;
        c.0 += d.x * d.x;
        c.1 += d.y * d.y;
        c.2 += d.x * d.y;
    }
    (c.0 / n, c.1 / n, c.2 / n)
}

/// Straightness as a rotation-invariant coefficient of determination.
///
/// With covariance eigenvalues `l1 >= l2` this is `((l1 - l2) / (l1 + l2))^2`,
/// the ordinary y-on-x r² of the path once its principal axis is rotated to
/// 45 degrees. It is 1 for any straight path and 0 for an isotropic cloud.
pub fn straightness_r2(samples: &[Vec2]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    let (sxx, syy, sxy) = covariance(samples);
    let trace = sxx + syy;
    let scale = samples.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1.0);
    if trace <= 1e-24 * scale * scale {
        return Err(Error::DegeneratePath);
    }
    // l1 - l2 = sqrt((sxx - syy)^2 + 4 sxy^2)
    let gap = libm::hypot(sxx - syy, 2.0 * sxy);
    let r = gap / trace;
    Ok((r * r).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DerivativeStats {
    pub accel: MeanStd,
    pub jerk: MeanStd,
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::NonuniformSampling);
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::NonuniformSampling);
        }
    }
    Ok(dt)
}

/// Finite-difference acceleration and jerk, both axes pooled.
///
/// Acceleration uses the centred second difference at every interior sample;
/// jerk uses the four-point third difference, exact for cubics.
pub fn derivative_stats(times: &[f64], samples: &[Vec2]) -> Result<DerivativeStats> {
    if samples.len() < 4 || times.len() != samples.len() {
        return Err(Error::TooFewSamples { needed: 4, got: samples.len().min(times.len()) });
    }
    let dt = uniform_step(times)?;
    let mut acc = Vec::with_capacity(2 * samples.len());
    for w in samples.windows(3) {
        let a = (w[2] - w[1] * 2.0 + w[0]) / (dt * dt);
        acc.extend_from_slice(&[a.x, a.y]);
    }
    let mut jerk = Vec::with_capacity(2 * samples.len());
    for w in samples.windows(4) {
        let j = (w[3] - w[2] * 3.0 + w[1] * 3.0 - w[0]) / (dt * dt * dt);
        jerk.extend_from_slice(&[j.x, j.y]);
    }
    Ok(DerivativeStats { accel: MeanStd::of(&acc), jerk: MeanStd::of(&jerk) })
}

/// Variance of the index-domain second differences, both axes pooled.
pub fn second_derivative_variance(samples: &[Vec2]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: samples.len() });
    }
    let mut d2 = Vec::with_capacity(2 * samples.len());
    for w in samples.windows(3) {
        let a = w[2] - w[1] * 2.0 + w[0];
        d2.extend_from_slice(&[a.x, a.y]);
    }
    let s = MeanStd::of(&d2);
    Ok(s.std * s.std)
}

pub const DEFAULT_SCALES: usize = 50;

/// Box-counting slope of `log N(s)` against `log s`.
///
/// The polyline is placed in its square bounding box of side `L`, box sizes
/// run geometrically from `L/2` down to `L/256`, and a box counts when any
/// segment passes through it. The result is negative; its magnitude estimates
/// the dimension.
pub fn fractal_slope(samples: &[Vec2], n_scales: usize) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    if n_scales < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_scales });
    }
    let (mut lo, mut hi) = (samples[0], samples[0]);
    for p in samples {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let side = (hi - lo).amax();
    if !(side > 0.0) {
        return Err(Error::DegeneratePath);
    }

    let mut xs = Vec::with_capacity(n_scales);
    let mut ys = Vec::with_capacity(n_scales);
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for k in 0..n_scales {
        let frac = k as f64 / (n_scales - 1) as f64;
        let s = side / 2.0 * libm::pow(1.0 / 128.0, frac);
        cells.clear();
        let scaled = |p: &Vec2| (p - lo) / s;
        for w in samples.windows(2) {
            traverse(scaled(&w[0]), scaled(&w[1]), &mut cells);
        }
        cells.sort_unstable();
        cells.dedup();
        xs.push(libm::log(s));
        ys.push(libm::log(cells.len() as f64));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Appends every unit grid cell the segment `a`-`b` passes through.
fn traverse(a: Vec2, b: Vec2, cells: &mut Vec<(i64, i64)>) {
    let (mut ix, mut iy) = (libm::floor(a.x) as i64, libm::floor(a.y) as i64);
    let (ex, ey) = (libm::floor(b.x) as i64, libm::floor(b.y) as i64);
    cells.push((ix, iy));
    let d = b - a;
    let axis = |d: f64, q: f64, i: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, ((i + 1) as f64 - q) / d, 1.0 / d)
        } else if d < 0.0 {
            (-1, (i as f64 - q) / d, -1.0 / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (sx, mut tx, dx) = axis(d.x, a.x, ix);
    let (sy, mut ty, dy) = axis(d.y, a.y, iy);
    let mut budget = (ex - ix).abs() + (ey - iy).abs();
    while (ix, iy) != (ex, ey) && budget > 0 {
        let t = tx.min(ty);
        if t > 1.0 {
            break;
        }
        if tx <= ty {
            ix += sx;
            tx += dx;
            budget -= 1;
        }
        if ty <= t {
            iy += sy;
            ty += dy;
            budget -= 1;
        }
        cells.push((ix, iy));
    }
}

/// Per-axis absolute final error over repeats.
pub fn positional_error(finals: &[Vec2], target: Vec2) -> (MeanStd, MeanStd) {
    let ex: Vec<f64> = finals.iter().map(|p| (p.x - target.x).abs()).collect();
    let ey: Vec<f64> = finals.iter().map(|p| (p.y - target.y).abs()).collect();
    (MeanStd::of(&ex), MeanStd::of(&ey))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub err_x: Option<MeanStd>,
    pub err_y: Option<MeanStd>,
    pub path_length: f64,
    pub r2: Option<f64>,
    pub accel_mean: f64,
    pub accel_std: f64,
    pub jerk_mean: f64,
    pub jerk_std: f64,
    pub d2_variance: f64,
    pub fractal_slope: Option<f64>,
}

impl MetricsBundle {
    /// Metrics of one run. `target` is the goal the run should end at, if any.
    pub fn from_run(times: &[f64], samples: &[Vec2], target: Option<Vec2>) -> Result<Self> {
        let ds = derivative_stats(times, samples)?;
        let errs = target.map(|t| positional_error(&samples[samples.len() - 1..], t));
        Ok(MetricsBundle {
            err_x: errs.map(|e| e.0),
            err_y: errs.map(|e| e.1),
            path_length: path_length(samples)?,
            r2: straightness_r2(samples).ok(),
            accel_mean: ds.accel.mean,
            accel_std: ds.accel.std,
            jerk_mean: ds.jerk.mean,
            jerk_std: ds.jerk.std,
            d2_variance: second_derivative_variance(samples)?,
            fractal_slope: fractal_slope(samples, DEFAULT_SCALES).ok(),
        })
    }

    /// Combines repeats: errors from the final positions, everything else
    /// averaged.
    pub fn aggregate(runs: &[MetricsBundle], finals: &[Vec2], target: Option<Vec2>) -> Self {
        let avg = |f: &dyn Fn(&MetricsBundle) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>()).mean;
        let avg_opt = |f: &dyn Fn(&MetricsBundle) -> Option<f64>| {
            let v: Option<Vec<f64>> = runs.iter().map(f).collect();
            v.filter(|v| !v.is_empty()).map(|v| MeanStd::of(&v).mean)
        };
        let errs = target.filter(|_| !finals.is_empty()).map(|t| positional_error(finals, t));
        MetricsBundle {
            err_x: errs.map(|e| e.0),
            err_y: errs.map(|e| e.1),
            path_length: avg(&|m| m.path_length),
            r2: avg_opt(&|m| m.r2),
            accel_mean: avg(&|m| m.accel_mean),
            accel_std: avg(&|m| m.accel_std),
            jerk_mean: avg(&|m| m.jerk_mean),
            jerk_std: avg(&|m| m.jerk_std),
            d2_variance: avg(&|m| m.d2_variance),
            fractal_slope: avg_opt(&|m| m.fractal_slope),
        }
    }
}
