//! Detector localization noise: fitting per-axis deviation statistics from
//! matched detection / ground-truth pairs and turning them into the diagonal
//! covariance `D` used by the filter.
//!
//! Deviations are `gt − det` on the ground plane, pooled over every object
//! and observation, with population (1/N) normalization. The mean is reported
//! but not used by `D`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{solve, CostMatrix};
use crate::geometry::Box3D;

/// Default center-distance gate when pairing detections with ground truth.
pub const DEFAULT_MATCH_DISTANCE: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseModelError {
    #[error("need at least 2 matched pairs to fit deviation statistics, got {0}")]
    TooFewPairs(usize),
    #[error("degenerate calibration set: zero variance along {axis}")]
    ZeroVariance { axis: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub mu_x: f64,
    pub mu_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub n_pairs: usize,
}

/// Streaming mean/variance over 2D deviations (Welford), mergeable so
/// sequences can be reduced independently.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeviationAccumulator {
    n: usize,
    mean: [f64; 2],
    m2: [f64; 2],
}

impl DeviationAccumulator {
    pub fn push(&mut self, dev: [f64; 2]) {
        self.n += 1;
        let n = self.n as f64;
        for axis in 0..2 {
            let delta = dev[axis] - self.mean[axis];
            self.mean[axis] += delta / n;
            self.m2[axis] += delta * (dev[axis] - self.mean[axis]);
        }
    }

    pub fn merge(&mut self, other: &DeviationAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for axis in 0..2 {
            let delta = other.mean[axis] - self.mean[axis];
            self.mean[axis] += delta * nb / n;
            self.m2[axis] += other.m2[axis] + delta * delta * na * nb / n;
        }
        self.n += other.n;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn finish(&self) -> Result<DeviationStats, NoiseModelError> {
        if self.n < 2 {
            return Err(NoiseModelError::TooFewPairs(self.n));
        }
        let n = self.n as f64;
        Ok(DeviationStats {
            mu_x: self.mean[0],
            mu_y: self.mean[1],
            var_x: (self.m2[0] / n).max(0.0),
            var_y: (self.m2[1] / n).max(0.0),
            n_pairs: self.n,
        })
    }
}

/// Pairs detections with ground truth one-to-one by minimum total
/// ground-plane center distance; pairs farther apart than
/// `max_center_dist` are dropped. Returns `(det, gt)` pairs in detection
/// order.
pub fn match_detections_to_gt(
    dets: &[Box3D],
    gts: &[Box3D],
    max_center_dist: f64,
) -> Vec<(Box3D, Box3D)> {
    if dets.is_empty() || gts.is_empty() {
        return Vec::new();
    }
    let dist = |d: &Box3D, g: &Box3D| (d.cx - g.cx).hypot(d.cy - g.cy);
    let costs = CostMatrix::from_fn(dets.len(), gts.len(), |r, c| dist(&dets[r], &gts[c]));
    solve(&costs)
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (r, c)))
        .filter(|&(r, c)| costs.get(r, c) <= max_center_dist)
        .map(|(r, c)| (dets[r], gts[c]))
        .collect()
}

pub fn fit_deviation_stats(pairs: &[(Box3D, Box3D)]) -> Result<DeviationStats, NoiseModelError> {
    let mut acc = DeviationAccumulator::default();
    for (det, gt) in pairs {
        acc.push([gt.cx - det.cx, gt.cy - det.cy]);
    }
    acc.finish()
}

/// Diagonal detection-noise covariance for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub d_matrix: Matrix2<f64>,
    pub detector_name: String,
}

impl NoiseModel {
    pub fn var_x(&self) -> f64 {
        self.d_matrix[(0, 0)]
    }

    pub fn var_y(&self) -> f64 {
        self.d_matrix[(1, 1)]
    }

    pub fn to_file(&self) -> NoiseModelFile {
        NoiseModelFile {
            detector: self.detector_name.clone(),
            var_x: self.var_x(),
            var_y: self.var_y(),
        }
    }
}

/// On-disk form of a noise model (the `[noise]` table of a config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModelFile {
    pub detector: String,
    pub var_x: f64,
    pub var_y: f64,
}

pub fn build_noise_covariance(
    stats: &DeviationStats,
    detector_name: impl Into<String>,
) -> Result<NoiseModel, NoiseModelError> {
    if !(stats.var_x > 0.0) {
        return Err(NoiseModelError::ZeroVariance { axis: "x" });
    }
    if !(stats.var_y > 0.0) {
        return Err(NoiseModelError::ZeroVariance { axis: "y" });
    }
    Ok(NoiseModel {
        d_matrix: Matrix2::new(stats.var_x, 0.0, 0.0, stats.var_y),
        detector_name: detector_name.into(),
    })
}
