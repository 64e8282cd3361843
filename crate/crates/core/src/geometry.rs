//! Camera calibration: a 2x3 affine map from the camera frame to the
//! orthographic image frame, and the linear pixel-to-centimetre mapping onto
//! the table workspace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec2;

/// Below this the 3x3 source matrix is treated as singular.
const SINGULAR_DET: f64 = 1e-12;

/// `[x'; y'] = [a00 a01; a10 a11] [x; y] + [b00; b10]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a00: f64,
    pub a01: f64,
    pub a10: f64,
    pub a11: f64,
    pub b00: f64,
    pub b10: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        a00: 1.0,
        a01: 0.0,
        a10: 0.0,
        a11: 1.0,
        b00: 0.0,
        b10: 0.0,
    };

    pub fn determinant(&self) -> f64 {
        self.a00 * self.a11 - self.a01 * self.a10
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        apply_affine(self, p)
    }

    /// Inverse map, if the linear part is invertible.
    pub fn inverse(&self) -> Option<AffineMap> {
        let det = self.determinant();
        if det.abs() < SINGULAR_DET {
            return None;
        }
        let (i00, i01, i10, i11) = (self.a11 / det, -self.a01 / det, -self.a10 / det, self.a00 / det);
        Some(AffineMap {
            a00: i00,
            a01: i01,
            a10: i10,
            a11: i11,
            b00: -(i00 * self.b00 + i01 * self.b10),
            b10: -(i10 * self.b00 + i11 * self.b10),
        })
    }
}

/// Fits the affine map that sends each `src[i]` to `dst[i]` exactly.
///
/// Each output row is an independent 3x3 system `[x y 1] . [a, a', b] = x'`;
/// both share the source matrix, which is inverted once via its adjugate.
pub fn estimate_affine(src: &[Vec2; 3], dst: &[Vec2; 3]) -> Result<AffineMap> {
    // Rows of S are [x_i, y_i, 1].
    let s = |i: usize, j: usize| match j {
        0 => src[i].x,
        1 => src[i].y,
        _ => 1.0,
    };
    let cof = |r: usize, c: usize| {
        let rows: [usize; 2] = match r {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let cols: [usize; 2] = match c {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let minor = s(rows[0], cols[0]) * s(rows[1], cols[1]) - s(rows[0], cols[1]) * s(rows[1], cols[0]);
        if (r + c) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    let det = s(0, 0) * cof(0, 0) + s(0, 1) * cof(0, 1) + s(0, 2) * cof(0, 2);
    if det.abs() < SINGULAR_DET {
        return Err(Error::CollinearPoints { det });
    }
    // inv(S)[i][j] = cof(j, i) / det
    let solve = |rhs: [f64; 3]| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|j| cof(j, i) * rhs[j]).sum::<f64>() / det;
        }
        out
    };
    let row_x = solve([dst[0].x, dst[1].x, dst[2].x]);
    let row_y = solve([dst[0].y, dst[1].y, dst[2].y]);
    Ok(AffineMap {
        a00: row_x[0],
        a01: row_x[1],
        b00: row_x[2],
        a10: row_y[0],
        a11: row_y[1],
        b10: row_y[2],
    })
}

pub fn apply_affine(m: &AffineMap, p: Vec2) -> Vec2 {
    Vec2::new(m.a00 * p.x + m.a01 * p.y + m.b00, m.a10 * p.x + m.a11 * p.y + m.b10)
}

/// Extents of the workspace in the orthographic image frame (pixels) and on
/// the table (cm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceCalib {
    pub x_max_prime: f64,
    pub y_max_prime: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for WorkspaceCalib {
    /// 10 px per cm over the 52 x 47 cm table.
    fn default() -> Self {
        WorkspaceCalib {
            x_max_prime: 520.0,
            y_max_prime: 470.0,
            width: crate::WORKSPACE_WIDTH,
            height: crate::WORKSPACE_HEIGHT,
        }
    }
}

impl WorkspaceCalib {
    pub fn validate(&self) -> Result<()> {
        let all = [self.x_max_prime, self.y_max_prime, self.width, self.height];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidCalibration(alloc::format!(
                "extents must be strictly positive, got {:?}",
                all
            )))
        }
    }

    /// Length of the image-frame diagonal, pixels.
    pub fn image_diagonal(&self) -> f64 {
        libm::hypot(self.x_max_prime, self.y_max_prime)
    }

    pub fn pixel_to_world(&self, p: Vec2) -> Result<Vec2> {
        pixel_to_world(self, p)
    }

    /// Inverse of [`pixel_to_world`]; no bounds check.
    pub fn world_to_pixel(&self, w: Vec2) -> Vec2 {
        Vec2::new(w.x / self.width * self.x_max_prime, w.y / self.height * self.y_max_prime)
    }
}

/// `x_real = x'/x'_max * width`, `y_real = y'/y'_max * height`.
///
/// Points up to one pixel outside the calibrated extents are accepted.
pub fn pixel_to_world(c: &WorkspaceCalib, p: Vec2) -> Result<Vec2> {
    const SLACK_PX: f64 = 1.0;
    let inside = |v: f64, max: f64| v >= -SLACK_PX && v <= max + SLACK_PX;
    if !(inside(p.x, c.x_max_prime) && inside(p.y, c.y_max_prime)) {
        return Err(Error::OutOfFrame { x: p.x, y: p.y });
    }
    Ok(Vec2::new(p.x / c.x_max_prime * c.width, p.y / c.y_max_prime * c.height))
}
