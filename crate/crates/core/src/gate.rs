//! Two-tier observational gate.
//!
//! Every detection must score above `alpha_conf`. Detections scoring at least
//! `alpha_nconf` pass unconditionally; weaker ones pass only when they lie
//! within `sigma` (ground-plane Euclidean) of a confirmed trajectory's
//! current estimate. The scan over confirmed trajectories stops at the first
//! hit, so the cost is O(n·l) for n detections and l confirmed trajectories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io_kitti::Detection3D;

#[derive(Debug, Error, PartialEq)]
pub enum GateError {
    #[error("alpha_conf ({alpha_conf}) must not exceed alpha_nconf ({alpha_nconf})")]
    ThresholdOrder { alpha_conf: f64, alpha_nconf: f64 },
    #[error("gate sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Floor every detection must exceed.
    pub alpha_conf: f64,
    /// Score at which a detection passes without a nearby confirmed track.
    pub alpha_nconf: f64,
    /// Proximity radius in meters.
    pub sigma: f64,
}

impl GateConfig {
    pub fn new(alpha_conf: f64, alpha_nconf: f64, sigma: f64) -> Result<Self, GateError> {
        let cfg = GateConfig {
            alpha_conf,
            alpha_nconf,
            sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GateError> {
        if !(self.alpha_conf <= self.alpha_nconf) {
            return Err(GateError::ThresholdOrder {
                alpha_conf: self.alpha_conf,
                alpha_nconf: self.alpha_nconf,
            });
        }
        if !(self.sigma > 0.0) {
            return Err(GateError::NonPositiveSigma(self.sigma));
        }
        Ok(())
    }
}

/// A detection admitted by the gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admitted {
    /// Index into the gated slice.
    pub index: usize,
    /// True when admitted through proximity to a confirmed trajectory.
    pub near_confirmed: bool,
}

/// Core decision for a single score/position.
pub fn admit(score: f64, xy: [f64; 2], confirmed_positions: &[[f64; 2]], cfg: &GateConfig) -> Option<bool> {
    if score <= cfg.alpha_conf {
        return None;
    }
    if score >= cfg.alpha_nconf {
        return Some(false);
    }
    let near = confirmed_positions
        .iter()
        .any(|p| (xy[0] - p[0]).hypot(xy[1] - p[1]) <= cfg.sigma);
    near.then_some(true)
}

/// Filters `dets` (already in the trajectories' frame) against the current
/// estimates of confirmed trajectories. Output preserves input order.
pub fn filter_detections(
    dets: &[Detection3D],
    confirmed_positions: &[[f64; 2]],
    cfg: &GateConfig,
) -> Vec<Admitted> {
    dets.iter()
        .enumerate()
        .filter_map(|(index, d)| {
            admit(d.score, d.bbox.xy(), confirmed_positions, cfg).map(|near_confirmed| Admitted {
                index,
                near_confirmed,
            })
        })
        .collect()
}
