//! Whole-sequence helpers on top of the per-frame tracker: run a sequence,
//! calibrate a noise model, evaluate a result file.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::eval::{evaluate, EvalError, MetricsReport};
use crate::geometry::{Frame, Pose};
use crate::io_kitti::{
    self, result_rows, BoxConvention, Detection3D, FrameStream, IoKittiError, LabeledTrack,
};
use crate::noise_model::{
    build_noise_covariance, match_detections_to_gt, DeviationAccumulator, NoiseModel,
    NoiseModelError,
};
use crate::tracker::{FrameResult, MultiClassTracker, TrackerConfig, TrackerError, TrackerStats};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] IoKittiError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    NoiseModel(#[from] NoiseModelError),
    #[error("{poses} poses cannot cover {frames} frames")]
    PoseCount { poses: usize, frames: usize },
    #[error("results contain frame {last} beyond the {labels} labeled frames")]
    ResultsBeyondLabels { last: usize, labels: usize },
}

/// Coordinate frame of written results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFrame {
    /// Each frame's sensor coordinates, like the inputs.
    #[default]
    Sensor,
    World,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub frames: usize,
    pub born: u64,
    pub pruned: u64,
    pub confirmed: u64,
    pub track_seconds: f64,
    pub io_seconds: f64,
    pub fps: f64,
}

fn pose_at<'a>(poses: Option<&'a [Pose]>, f: usize, identity: &'a Pose) -> &'a Pose {
    poses.map_or(identity, |p| &p[f])
}

/// Tracks a whole stream. Returns per-frame world-frame results, the run
/// statistics and the time spent inside tracker steps.
pub fn track_stream(
    detections: &[Vec<Detection3D>],
    poses: Option<&[Pose]>,
    cfg: &TrackerConfig,
    frames: usize,
) -> Result<(Vec<FrameResult>, TrackerStats, f64), PipelineError> {
    if let Some(p) = poses {
        if p.len() < frames {
            return Err(PipelineError::PoseCount {
                poses: p.len(),
                frames,
            });
        }
    }
    let mut tracker = MultiClassTracker::new(*cfg)?;
    let identity = Pose::identity();
    let mut out = Vec::with_capacity(frames);
    let mut seconds = 0.0;
    for f in 0..frames {
        let dets = detections.get(f).map_or(&[][..], Vec::as_slice);
        let t0 = Instant::now();
        out.push(tracker.step(f as u32, dets, pose_at(poses, f, &identity))?);
        seconds += t0.elapsed().as_secs_f64();
    }
    let mut stats = tracker.stats();
    stats.frames = frames as u64;
    Ok((out, stats, seconds))
}

/// Maps world-frame results into each frame's sensor coordinates.
pub fn to_sensor_frame(results: &mut [FrameResult], poses: Option<&[Pose]>) {
    let identity = Pose::identity();
    for (f, fr) in results.iter_mut().enumerate() {
        let inv = pose_at(poses, f, &identity).inverse();
        for t in &mut fr.tracks {
            t.bbox = inv.map_box(&t.bbox, Frame::Lidar);
        }
    }
}

/// Results regrouped into a label-shaped stream of `frames` frames.
pub fn results_as_stream(results: &[FrameResult], frames: usize) -> FrameStream<LabeledTrack> {
    let mut stream: FrameStream<LabeledTrack> = vec![Vec::new(); frames];
    for row in result_rows(results) {
        if let Some(slot) = stream.get_mut(row.frame as usize) {
            slot.push(row);
        }
    }
    stream
}

pub fn track_files(
    detections_path: &Path,
    poses_path: Option<&Path>,
    cfg: &TrackerConfig,
    output_path: &Path,
    output_frame: OutputFrame,
    conv: BoxConvention,
) -> Result<RunSummary, PipelineError> {
    let t0 = Instant::now();
    let detections = io_kitti::read_detections(detections_path, conv)?;
    let poses = poses_path.map(io_kitti::read_poses).transpose()?;
    let frames = detections.len().max(poses.as_ref().map_or(0, Vec::len));
    let mut io_seconds = t0.elapsed().as_secs_f64();

    let (mut results, stats, track_seconds) =
        track_stream(&detections, poses.as_deref(), cfg, frames)?;
    if output_frame == OutputFrame::Sensor {
        to_sensor_frame(&mut results, poses.as_deref());
    }

    let t1 = Instant::now();
    io_kitti::write_results(output_path, &results, conv)?;
    io_seconds += t1.elapsed().as_secs_f64();
    Ok(RunSummary {
        frames,
        born: stats.born,
        pruned: stats.pruned,
        confirmed: stats.confirmed,
        track_seconds,
        io_seconds,
        fps: if track_seconds > 0.0 {
            frames as f64 / track_seconds
        } else {
            0.0
        },
    })
}

/// Fits the detector noise model from per-frame detection/label matches.
/// With poses, deviations are measured in the world frame.
pub fn calibrate_streams(
    detections: &[Vec<Detection3D>],
    labels: &[Vec<LabeledTrack>],
    poses: Option<&[Pose]>,
    detector_name: &str,
    max_center_dist: f64,
) -> Result<NoiseModel, PipelineError> {
    let identity = Pose::identity();
    let mut acc = DeviationAccumulator::default();
    for (f, (dets, gts)) in detections.iter().zip(labels).enumerate() {
        let pose = pose_at(poses, f, &identity);
        let to_frame = |b| {
            if poses.is_some() {
                pose.map_box(b, Frame::World)
            } else {
                *b
            }
        };
        let d: Vec<_> = dets.iter().map(|d| to_frame(&d.bbox)).collect();
        let g: Vec<_> = gts.iter().map(|g| to_frame(&g.bbox)).collect();
        for (det, gt) in match_detections_to_gt(&d, &g, max_center_dist) {
            acc.push([gt.cx - det.cx, gt.cy - det.cy]);
        }
    }
    let stats = acc.finish()?;
    Ok(build_noise_covariance(&stats, detector_name)?)
}

pub fn calibrate_files(
    detections_path: &Path,
    labels_path: &Path,
    poses_path: Option<&Path>,
    detector_name: &str,
    max_center_dist: f64,
    conv: BoxConvention,
) -> Result<NoiseModel, PipelineError> {
    let detections = io_kitti::read_detections(detections_path, conv)?;
    let labels = io_kitti::read_tracks(labels_path, conv)?;
    let poses = poses_path.map(io_kitti::read_poses).transpose()?;
    let frames = detections.len().min(labels.len());
    if let Some(p) = &poses {
        if p.len() < frames {
            return Err(PipelineError::PoseCount {
                poses: p.len(),
                frames,
            });
        }
    }
    calibrate_streams(
        &detections[..frames],
        &labels[..frames],
        poses.as_deref(),
        detector_name,
        max_center_dist,
    )
}

/// Evaluates a result file. Result files end at their last non-empty frame,
/// so a shorter result stream is padded with empty frames.
pub fn eval_files(
    results_path: &Path,
    labels_path: &Path,
    threshold: f64,
    conv: BoxConvention,
) -> Result<MetricsReport, PipelineError> {
    let mut results = io_kitti::read_tracks(results_path, conv)?;
    let labels = io_kitti::read_tracks(labels_path, conv)?;
    if results.len() > labels.len() {
        return Err(PipelineError::ResultsBeyondLabels {
            last: results.len() - 1,
            labels: labels.len(),
        });
    }
    results.resize(labels.len(), Vec::new());
    Ok(evaluate(&results, &labels, threshold)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate, scenario};

    #[test]
    fn files_round_trip_through_track_and_eval() {
        let dir = tempfile::tempdir().unwrap();
        let gen = generate(&scenario("long-occlusion", 4).unwrap()).unwrap();
        let conv = BoxConvention::default();
        let det = dir.path().join("det.txt");
        let lab = dir.path().join("labels.txt");
        let pose = dir.path().join("poses.txt");
        let out = dir.path().join("out.txt");
        io_kitti::write_detections(&det, &gen.detections, conv).unwrap();
        io_kitti::write_labels(&lab, &gen.labels, conv).unwrap();
        io_kitti::write_poses(&pose, &gen.poses).unwrap();

        let mut cfg = TrackerConfig::default();
        cfg.tracker.emit_unconfirmed = true;
        let summary = track_files(&det, Some(&pose), &cfg, &out, OutputFrame::Sensor, conv).unwrap();
        assert_eq!(summary.frames, 160);
        assert_eq!(summary.born, 1);
        let report = eval_files(&out, &lab, 0.5, conv).unwrap();
        assert_eq!(report.idsw, 0);
        assert!(report.tp > 100);
    }

    #[test]
    fn calibration_in_world_frame_matches_sensor_frame_without_rotation() {
        let gen = generate(&scenario("parked-jitter", 9).unwrap()).unwrap();
        let a = calibrate_streams(&gen.detections, &gen.labels, None, "x", 2.0).unwrap();
        let b = calibrate_streams(&gen.detections, &gen.labels, Some(&gen.poses), "x", 2.0).unwrap();
        assert!((a.var_x() - b.var_x()).abs() < 1e-12);
        assert!((a.var_y() - b.var_y()).abs() < 1e-12);
    }

    #[test]
    fn results_past_the_labels_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let conv = BoxConvention::default();
        let res = dir.path().join("r.txt");
        let lab = dir.path().join("l.txt");
        std::fs::write(&res, "5 0 Car 0 0 0 0 0 0 0 1.5 1.8 4.0 1 2 0 0 0.9\n").unwrap();
        std::fs::write(&lab, "0 0 Car 0 0 0 0 0 0 0 1.5 1.8 4.0 1 2 0 0\n").unwrap();
        assert!(matches!(
            eval_files(&res, &lab, 0.5, conv),
            Err(PipelineError::ResultsBeyondLabels { .. })
        ));
    }
}
