//! Online 3D multi-object tracking by detection.
//!
//! Detections pass a two-tier score/proximity gate, are associated with
//! cached trajectories by optimal assignment on ground-plane distance, and
//! drive constant-acceleration Kalman filters whose innovation covariance
//! includes a fitted detector-noise term. Trajectories are confirmed by an
//! accumulated certainty score and dropped when their position variance
//! grows too large.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod association;
pub mod bench;
pub mod config;
pub mod eval;
pub mod gate;
pub mod geometry;
pub mod io_kitti;
pub mod kalman;
pub mod noise_model;
pub mod pipeline;
pub mod simulator;
pub mod tracker;
pub mod validity;

pub use config::{load_config, parse_config, preset, DetectorPreset};
pub use geometry::{Box3D, Frame, Pose};
pub use io_kitti::{Detection3D, LabeledTrack};
pub use tracker::{FrameResult, MultiClassTracker, TrackOutput, Tracker, TrackerConfig};
