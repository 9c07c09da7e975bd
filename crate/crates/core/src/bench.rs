//! Single-threaded throughput harness.
//!
//! The timed region is the tracker step alone; reading inputs and writing
//! outputs happen outside it. Each repetition runs a fresh tracker over the
//! whole stream on the calling thread, and the report describes the
//! repetition with the median wall time.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Pose;
use crate::io_kitti::Detection3D;
use crate::tracker::{FrameResult, MultiClassTracker, Stage, StageProbe, TrackerConfig, TrackerError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least 3 repetitions are required, got {0}")]
    TooFewRepetitions(usize),
    #[error("{poses} poses for {frames} frames")]
    PoseCount { poses: usize, frames: usize },
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageLatency {
    pub stage: Stage,
    /// Mean time per frame, µs.
    pub mean_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub frames: usize,
    pub repetitions: usize,
    /// Timed region of the median repetition, seconds.
    pub wall_seconds: f64,
    pub fps: f64,
    /// Wall time of every repetition, seconds.
    pub repetition_seconds: Vec<f64>,
    pub stages: Vec<StageLatency>,
    pub mean_detections_per_frame: f64,
    pub mean_live_tracks: f64,
    /// Input and output time outside the timed region, when measured.
    pub io_seconds: Option<f64>,
    /// Per-frame step latency of the median repetition, µs.
    #[serde(skip)]
    pub per_frame_us: Vec<f64>,
}

impl BenchReport {
    pub fn to_key_values(&self) -> String {
        let mut s = format!(
            "frames={}\nrepetitions={}\nwall_seconds={}\nfps={}\nmean_detections_per_frame={}\nmean_live_tracks={}\n",
            self.frames,
            self.repetitions,
            self.wall_seconds,
            self.fps,
            self.mean_detections_per_frame,
            self.mean_live_tracks
        );
        if let Some(io) = self.io_seconds {
            s.push_str(&format!("io_seconds={io}\n"));
        }
        for st in &self.stages {
            let name = serde_json::to_value(st.stage).expect("stage name");
            s.push_str(&format!(
                "stage_{}_us={}\n",
                name.as_str().unwrap_or("?"),
                st.mean_us
            ));
        }
        s
    }
}

struct Timer {
    open: [Option<Instant>; Stage::ALL.len()],
    total: [Duration; Stage::ALL.len()],
}

impl Timer {
    fn new() -> Self {
        Timer {
            open: [None; Stage::ALL.len()],
            total: [Duration::ZERO; Stage::ALL.len()],
        }
    }
}

fn slot(stage: Stage) -> usize {
    Stage::ALL.iter().position(|s| *s == stage).expect("listed stage")
}

impl StageProbe for Timer {
    #[inline]
    fn begin(&mut self, stage: Stage) {
        self.open[slot(stage)] = Some(Instant::now());
    }

    #[inline]
    fn end(&mut self, stage: Stage) {
        let i = slot(stage);
        if let Some(t0) = self.open[i].take() {
            self.total[i] += t0.elapsed();
        }
    }
}

struct Repetition {
    wall: Duration,
    per_frame: Vec<f64>,
    stages: [Duration; Stage::ALL.len()],
    live_tracks: usize,
    outputs: Vec<FrameResult>,
}

fn run_once(
    detections: &[Vec<Detection3D>],
    poses: Option<&[Pose]>,
    cfg: &TrackerConfig,
) -> Result<Repetition, BenchError> {
    let mut tracker = MultiClassTracker::new(*cfg)?;
    let mut timer = Timer::new();
    let mut per_frame = Vec::with_capacity(detections.len());
    let mut outputs = Vec::with_capacity(detections.len());
    let mut wall = Duration::ZERO;
    let mut live_tracks = 0;
    let identity = Pose::identity();
    for (f, dets) in detections.iter().enumerate() {
        let pose = poses.map_or(&identity, |p| &p[f]);
        let t0 = Instant::now();
        let out = tracker.step_with_probe(f as u32, dets, pose, &mut timer)?;
        let dt = t0.elapsed();
        wall += dt;
        per_frame.push(dt.as_secs_f64() * 1e6);
        live_tracks += tracker.live_tracks();
        outputs.push(out);
    }
    Ok(Repetition {
        wall,
        per_frame,
        stages: timer.total,
        live_tracks,
        outputs,
    })
}

/// Runs `repetitions` timed passes and returns the report with the median
/// pass's outputs.
pub fn run_bench(
    detections: &[Vec<Detection3D>],
    poses: Option<&[Pose]>,
    cfg: &TrackerConfig,
    repetitions: usize,
) -> Result<(BenchReport, Vec<FrameResult>), BenchError> {
    if repetitions < 3 {
        return Err(BenchError::TooFewRepetitions(repetitions));
    }
    if let Some(p) = poses {
        if p.len() < detections.len() {
            return Err(BenchError::PoseCount {
                poses: p.len(),
                frames: detections.len(),
            });
        }
    }
    let mut reps = (0..repetitions)
        .map(|_| run_once(detections, poses, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let repetition_seconds: Vec<f64> = reps.iter().map(|r| r.wall.as_secs_f64()).collect();
    reps.sort_by_key(|r| r.wall);
    let median = reps.swap_remove(repetitions / 2);

    let frames = detections.len();
    let per = |d: Duration| {
        if frames == 0 {
            0.0
        } else {
            d.as_secs_f64() * 1e6 / frames as f64
        }
    };
    let wall_seconds = median.wall.as_secs_f64();
    let report = BenchReport {
        frames,
        repetitions,
        wall_seconds,
        fps: if wall_seconds > 0.0 {
            frames as f64 / wall_seconds
        } else {
            0.0
        },
        repetition_seconds,
        stages: Stage::ALL
            .iter()
            .zip(median.stages)
            .map(|(stage, d)| StageLatency {
                stage: *stage,
                mean_us: per(d),
            })
            .collect(),
        mean_detections_per_frame: if frames == 0 {
            0.0
        } else {
            detections.iter().map(Vec::len).sum::<usize>() as f64 / frames as f64
        },
        mean_live_tracks: if frames == 0 {
            0.0
        } else {
            median.live_tracks as f64 / frames as f64
        },
        io_seconds: None,
        per_frame_us: median.per_frame,
    };
    Ok((report, median.outputs))
}
