//! Beacon tracking with the three-state visibility machine.
//!
//! Each track carries its visibility, image and world positions, and the time
//! of its last detection. A track turns `Disappeared` once it has gone
//! undetected for longer than the configured delay, and `Moving` when a
//! detection lands more than the configured fraction of the frame extent away
//! from the previous detection.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vision::{Blob, ColorClass};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Stationary,
    Moving,
    Disappeared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconTrack {
    pub id: u32,
    #[serde(rename = "color")]
    pub color_class: ColorClass,
    pub visibility: Visibility,
    pub pos_image: Vec2,
    pub pos_real: Vec2,
    pub t_vis: f64,
    /// Time the track first turned `Disappeared`, for garbage collection.
    #[serde(skip)]
    pub disappeared_at: Option<f64>,
}

impl BeaconTrack {
    pub fn is_visible(&self) -> bool {
        self.visibility != Visibility::Disappeared
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Seconds without a detection before a track is declared disappeared.
    pub disappear_after: f64,
    /// Per-axis displacement, as a fraction of the frame extent, that marks a
    /// track as moving.
    pub move_fraction: f64,
    /// Association gate as a fraction of the image diagonal.
    pub gate_fraction: f64,
    /// Seconds after disappearance before a track is dropped.
    pub forget_after: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { disappear_after: 3.0, move_fraction: 0.05, gate_fraction: 0.2, forget_after: 10.0 }
    }
}

/// A blob together with its calibrated world position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub blob: Blob,
    pub pos_real: Vec2,
}

/// Image-frame extents used for the movement threshold, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameExtent {
    pub x_max: f64,
    pub y_max: f64,
}

impl FrameExtent {
    pub fn diagonal(&self) -> f64 {
        libm::hypot(self.x_max, self.y_max)
    }
}

pub fn update_track(
    track: &BeaconTrack,
    detection: Option<&Detection>,
    now: f64,
    frame: FrameExtent,
    cfg: &TrackerConfig,
) -> Result<BeaconTrack> {
    if now < track.t_vis {
        return Err(Error::ClockRegression { now, t_vis: track.t_vis });
    }
    let mut next = track.clone();
    match detection {
        Some(det) => {
            let d = det.blob.centroid - track.pos_image;
            let moved = d.x.abs() > cfg.move_fraction * frame.x_max || d.y.abs() > cfg.move_fraction * frame.y_max;
            next.visibility = if moved { Visibility::Moving } else { Visibility::Stationary };
            next.pos_image = det.blob.centroid;
            next.pos_real = det.pos_real;
            next.t_vis = now;
            next.disappeared_at = None;
        }
        None => {
            if now - track.t_vis > cfg.disappear_after && track.visibility != Visibility::Disappeared {
                next.visibility = Visibility::Disappeared;
                next.disappeared_at = Some(now);
            }
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// `(track index, blob index)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub new_blobs: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Greedy nearest-neighbour matching within colour class.
///
/// Candidate pairs farther apart than `gate` pixels are never matched.
/// Ties on distance resolve to the lower track index, then the lower blob
/// index.
pub fn associate(tracks: &[BeaconTrack], blobs: &[Blob], gate: f64) -> Assignment {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (bi, b) in blobs.iter().enumerate() {
            if t.color_class != b.color_class {
                continue;
            }
            let d = (t.pos_image - b.centroid).norm();
            if d <= gate {
                pairs.push((d, ti, bi));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut track_used = alloc::vec![false; tracks.len()];
    let mut blob_used = alloc::vec![false; blobs.len()];
    let mut out = Assignment::default();
    for (_, ti, bi) in pairs {
        if !track_used[ti] && !blob_used[bi] {
            track_used[ti] = true;
            blob_used[bi] = true;
            out.matches.push((ti, bi));
        }
    }
    out.matches.sort_unstable();
    out.new_blobs = (0..blobs.len()).filter(|&i| !blob_used[i]).collect();
    out.unmatched_tracks = (0..tracks.len()).filter(|&i| !track_used[i]).collect();
    out
}

/// The set of live tracks plus id allocation.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub cfg: TrackerConfig,
    pub frame: FrameExtent,
    tracks: Vec<BeaconTrack>,
    next_id: u32,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, frame: FrameExtent) -> Self {
        Tracker { cfg, frame, tracks: Vec::new(), next_id: 0 }
    }

    pub fn tracks(&self) -> &[BeaconTrack] {
        &self.tracks
    }

    pub fn get(&self, id: u32) -> Option<&BeaconTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Processes one camera frame worth of detections taken at `now`.
    pub fn observe(&mut self, detections: &[Detection], now: f64) -> Result<()> {
        let blobs: Vec<Blob> = detections.iter().map(|d| d.blob).collect();
        let gate = self.cfg.gate_fraction * self.frame.diagonal();
        let assignment = associate(&self.tracks, &blobs, gate);

        let mut updated = Vec::with_capacity(self.tracks.len() + assignment.new_blobs.len());
        let mut matched: Vec<Option<usize>> = alloc::vec![None; self.tracks.len()];
        for &(ti, bi) in &assignment.matches {
            matched[ti] = Some(bi);
        }
        for (ti, track) in self.tracks.iter().enumerate() {
            let det = matched[ti].map(|bi| &detections[bi]);
            let next = update_track(track, det, now, self.frame, &self.cfg)?;
            let forget = next.disappeared_at.is_some_and(|t| now - t > self.cfg.forget_after);
            if !forget {
                updated.push(next);
            }
        }
        for &bi in &assignment.new_blobs {
            let det = &detections[bi];
            updated.push(BeaconTrack {
                id: self.next_id,
                color_class: det.blob.color_class,
                visibility: Visibility::Stationary,
                pos_image: det.blob.centroid,
                pos_real: det.pos_real,
                t_vis: now,
                disappeared_at: None,
            });
            self.next_id += 1;
        }
        self.tracks = updated;
        Ok(())
    }
}
