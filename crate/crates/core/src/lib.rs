//! Closed-loop planar reaching with a dynamic-neural-field decision layer and a
//! bank of finite-horizon optimal controllers.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation over owned values: calibration, colour segmentation, beacon
//! tracking, field dynamics, policy synthesis, the cubic baseline, the plant,
//! the scenario runner and the trajectory metrics. File formats, the CLI and
//! the live session service live in the `neucf` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baseline;
pub mod control;
pub mod error;
pub mod field;
pub mod geometry;
pub mod metrics;
pub mod plant;
pub mod scenario;
pub mod sim;
pub mod tracker;
pub mod vision;

pub use error::Error;

/// Planar point or vector. Units depend on the frame (pixels or cm).
pub type Vec2 = nalgebra::Vector2<f64>;

/// Maximum end-effector speed of the arm, cm/s.
pub const MAX_SPEED: f64 = 25.0;

/// Default workspace extents, cm.
pub const WORKSPACE_WIDTH: f64 = 52.0;
pub const WORKSPACE_HEIGHT: f64 = 47.0;
