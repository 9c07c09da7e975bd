//! Per-frame tracking pipeline.
//!
//! Each [`Tracker::step`] runs, in order: transform detections into the world
//! frame, gate them against confirmed trajectories, associate the survivors
//! with every cached trajectory, update matched filters, score validity,
//! predict all filters one frame ahead, spawn trajectories from leftover
//! detections, prune trajectories whose position variance has grown past
//! `sigma_est_certainty`, and emit.
//!
//! Between steps every trajectory's filter holds the prediction for the next
//! frame, and `last_box` holds the estimate for the frame just processed.

use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::{associate_with, GatingMode};
use crate::gate::{filter_detections, GateConfig, GateError};
use crate::geometry::{Box3D, Frame, GeometryError, Pose};
use crate::io_kitti::Detection3D;
use crate::kalman::{self, FilterParams, FilterSettings, FilterState, KalmanError};
use crate::validity::{
    init_certainty, update_certainty, CertaintyState, ValidityConfig, ValidityError,
};

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("frame {frame} does not follow previous frame {previous}")]
    OutOfOrder { frame: u32, previous: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssocConfig {
    /// Maximum ground-plane distance of an accepted match, meters.
    pub sigma: f64,
    pub mode: GatingMode,
}

impl Default for AssocConfig {
    fn default() -> Self {
        AssocConfig {
            sigma: 4.0,
            mode: GatingMode::DemoteAfterSolve,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifecycleConfig {
    /// A trajectory is dropped once P_xx or P_yy exceeds this value.
    pub sigma_est_certainty: f64,
    /// Emit unconfirmed trajectories too.
    pub emit_unconfirmed: bool,
    /// Let detections admitted only through proximity start new trajectories.
    pub spawn_from_bypass: bool,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        LifecycleConfig {
            sigma_est_certainty: 4.0,
            emit_unconfirmed: false,
            spawn_from_bypass: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerConfig {
    pub gate: GateConfig,
    #[serde(default)]
    pub assoc: AssocConfig,
    #[serde(default)]
    pub validity: ValidityConfig,
    #[serde(default)]
    pub filter: FilterSettings,
    #[serde(default)]
    pub tracker: LifecycleConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            gate: GateConfig {
                alpha_conf: -1.0,
                alpha_nconf: 0.0,
                sigma: 4.0,
            },
            assoc: AssocConfig::default(),
            validity: ValidityConfig::default(),
            filter: FilterSettings::default(),
            tracker: LifecycleConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackerError> {
        self.gate.validate()?;
        self.validity.validate()?;
        self.filter.validate()?;
        if !(self.assoc.sigma > 0.0) {
            return Err(TrackerError::Config(format!(
                "assoc.sigma must be positive, got {}",
                self.assoc.sigma
            )));
        }
        if !(self.tracker.sigma_est_certainty > 0.0) {
            return Err(TrackerError::Config(format!(
                "tracker.sigma_est_certainty must be positive, got {}",
                self.tracker.sigma_est_certainty
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub filter: FilterState,
    pub certainty: CertaintyState,
    /// World-frame estimate for the last processed frame.
    pub last_box: Box3D,
    pub birth_frame: u32,
    pub last_update_frame: u32,
    pub class_label: String,
    pub last_score: f64,
}

impl Trajectory {
    pub fn is_confirmed(&self) -> bool {
        self.certainty.is_confirmed()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub class_label: String,
    pub bbox: Box3D,
    pub score: f64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameResult {
    pub frame: u32,
    /// Sorted by id.
    pub tracks: Vec<TrackOutput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TrackerStats {
    pub frames: u64,
    pub born: u64,
    pub pruned: u64,
    pub confirmed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Transform,
    Gate,
    Associate,
    Update,
    Validity,
    Predict,
    Spawn,
    Prune,
    Emit,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Transform,
        Stage::Gate,
        Stage::Associate,
        Stage::Update,
        Stage::Validity,
        Stage::Predict,
        Stage::Spawn,
        Stage::Prune,
        Stage::Emit,
    ];
}

/// Observer notified around every pipeline stage.
pub trait StageProbe {
    fn begin(&mut self, stage: Stage);
    fn end(&mut self, stage: Stage);
}

impl StageProbe for () {
    #[inline]
    fn begin(&mut self, _: Stage) {}
    #[inline]
    fn end(&mut self, _: Stage) {}
}

/// True when either position variance has grown past the threshold.
pub fn terminate_check(traj: &Trajectory, cfg: &TrackerConfig) -> bool {
    let (pxx, pyy) = traj.filter.position_variance();
    pxx > cfg.tracker.sigma_est_certainty || pyy > cfg.tracker.sigma_est_certainty
}

fn to_world(b: &Box3D, pose: &Pose) -> Box3D {
    match b.frame {
        Frame::Lidar => pose.map_box(b, Frame::World),
        Frame::World => *b,
    }
}

/// Single-class tracker for one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    params: FilterParams,
    tracks: Vec<Trajectory>,
    next_id: u64,
    last_frame: Option<u32>,
    stats: TrackerStats,
    pruned_last: Vec<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        cfg.validate()?;
        let params = FilterParams::constant_acceleration(&cfg.filter);
        params.validate()?;
        Ok(Tracker {
            cfg,
            params,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
            stats: TrackerStats::default(),
            pruned_last: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    /// Live trajectories in ascending id order.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.tracks
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    /// Ids removed during the most recent step.
    pub fn pruned_last_step(&self) -> &[u64] {
        &self.pruned_last
    }

    pub fn step(
        &mut self,
        frame: u32,
        detections: &[Detection3D],
        pose: &Pose,
    ) -> Result<FrameResult, TrackerError> {
        self.step_with_probe(frame, detections, pose, &mut ())
    }

    pub fn step_with_probe<P: StageProbe>(
        &mut self,
        frame: u32,
        detections: &[Detection3D],
        pose: &Pose,
        probe: &mut P,
    ) -> Result<FrameResult, TrackerError> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(TrackerError::OutOfOrder { frame, previous });
            }
        }
        pose.validate()?;
        let cfg = self.cfg;

        probe.begin(Stage::Transform);
        let world: Vec<Detection3D> = detections
            .iter()
            .map(|d| Detection3D {
                bbox: to_world(&d.bbox, pose),
                ..d.clone()
            })
            .collect();
        probe.end(Stage::Transform);

        probe.begin(Stage::Gate);
        let anchors: Vec<[f64; 2]> = if cfg.validity.enabled {
            self.tracks
                .iter()
                .filter(|t| t.is_confirmed())
                .map(|t| [t.filter.x[0], t.filter.x[1]])
                .collect()
        } else {
            Vec::new()
        };
        let admitted = filter_detections(&world, &anchors, &cfg.gate);
        probe.end(Stage::Gate);

        probe.begin(Stage::Associate);
        let track_xy: Vec<(u64, [f64; 2])> = self
            .tracks
            .iter()
            .map(|t| (t.id, [t.filter.x[0], t.filter.x[1]]))
            .collect();
        let det_xy: Vec<[f64; 2]> = admitted.iter().map(|a| world[a.index].bbox.xy()).collect();
        let assoc = associate_with(&track_xy, &det_xy, cfg.assoc.sigma, cfg.assoc.mode);
        // Tracks are kept sorted by id and matches come back in id order.
        let mut matched: Vec<Option<usize>> = vec![None; self.tracks.len()];
        {
            let mut m = assoc.matches.iter().peekable();
            for (slot, t) in matched.iter_mut().zip(&self.tracks) {
                if let Some(hit) = m.next_if(|hit| hit.track_id == t.id) {
                    *slot = Some(hit.detection);
                }
            }
        }
        probe.end(Stage::Associate);

        probe.begin(Stage::Update);
        for (t, det) in self.tracks.iter_mut().zip(&matched) {
            match det {
                Some(j) => {
                    let d = &world[admitted[*j].index];
                    let z = Vector2::new(d.bbox.cx, d.bbox.cy);
                    t.filter = kalman::update(&t.filter, z, &self.params)?;
                    t.last_box = Box3D {
                        cx: t.filter.x[0],
                        cy: t.filter.x[1],
                        ..d.bbox
                    };
                    t.last_score = d.score;
                    t.last_update_frame = frame;
                }
                None => {
                    t.last_box.cx = t.filter.x[0];
                    t.last_box.cy = t.filter.x[1];
                }
            }
        }
        probe.end(Stage::Update);

        probe.begin(Stage::Validity);
        for (t, det) in self.tracks.iter_mut().zip(&matched) {
            if det.is_some() && !t.is_confirmed() {
                t.certainty = update_certainty(&t.certainty, t.last_score, frame, &cfg.validity)?;
                if t.is_confirmed() {
                    self.stats.confirmed += 1;
                }
            }
        }
        probe.end(Stage::Validity);

        probe.begin(Stage::Predict);
        for t in &mut self.tracks {
            t.filter = kalman::predict(&t.filter, &self.params);
        }
        probe.end(Stage::Predict);

        probe.begin(Stage::Spawn);
        for &j in &assoc.unmatched_detections {
            let a = admitted[j];
            if a.near_confirmed && !cfg.tracker.spawn_from_bypass {
                continue;
            }
            let d = &world[a.index];
            let filter = kalman::init_state(Vector2::new(d.bbox.cx, d.bbox.cy), &self.params);
            let certainty = if cfg.validity.enabled {
                init_certainty(d.score, frame, &cfg.validity)
            } else {
                CertaintyState::confirmed_at(frame)
            };
            if certainty.is_confirmed() {
                self.stats.confirmed += 1;
            }
            self.tracks.push(Trajectory {
                id: self.next_id,
                filter: kalman::predict(&filter, &self.params),
                certainty,
                last_box: d.bbox,
                birth_frame: frame,
                last_update_frame: frame,
                class_label: d.class_label.clone(),
                last_score: d.score,
            });
            self.next_id += 1;
            self.stats.born += 1;
        }
        probe.end(Stage::Spawn);

        probe.begin(Stage::Prune);
        self.pruned_last.clear();
        let pruned = &mut self.pruned_last;
        self.tracks.retain(|t| {
            let drop = terminate_check(t, &cfg);
            if drop {
                pruned.push(t.id);
            }
            !drop
        });
        self.stats.pruned += self.pruned_last.len() as u64;
        probe.end(Stage::Prune);

        probe.begin(Stage::Emit);
        let tracks = self
            .tracks
            .iter()
            .filter(|t| cfg.tracker.emit_unconfirmed || t.is_confirmed())
            .map(|t| TrackOutput {
                id: t.id,
                class_label: t.class_label.clone(),
                bbox: t.last_box,
                score: t.last_score,
                confirmed: t.is_confirmed(),
            })
            .collect();
        probe.end(Stage::Emit);

        self.last_frame = Some(frame);
        self.stats.frames += 1;
        Ok(FrameResult { frame, tracks })
    }
}

/// Runs one independent [`Tracker`] per class label and hands out run-wide
/// ids in order of first emission.
#[derive(Debug, Clone)]
pub struct MultiClassTracker {
    cfg: TrackerConfig,
    trackers: BTreeMap<String, Tracker>,
    global_ids: HashMap<(String, u64), u64>,
    next_global: u64,
    last_frame: Option<u32>,
}

impl MultiClassTracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        cfg.validate()?;
        Ok(MultiClassTracker {
            cfg,
            trackers: BTreeMap::new(),
            global_ids: HashMap::new(),
            next_global: 0,
            last_frame: None,
        })
    }

    pub fn stats(&self) -> TrackerStats {
        self.trackers
            .values()
            .map(Tracker::stats)
            .fold(TrackerStats::default(), |a, s| TrackerStats {
                frames: a.frames.max(s.frames),
                born: a.born + s.born,
                pruned: a.pruned + s.pruned,
                confirmed: a.confirmed + s.confirmed,
            })
    }

    pub fn live_tracks(&self) -> usize {
        self.trackers.values().map(|t| t.trajectories().len()).sum()
    }

    pub fn step(
        &mut self,
        frame: u32,
        detections: &[Detection3D],
        pose: &Pose,
    ) -> Result<FrameResult, TrackerError> {
        self.step_with_probe(frame, detections, pose, &mut ())
    }

    pub fn step_with_probe<P: StageProbe>(
        &mut self,
        frame: u32,
        detections: &[Detection3D],
        pose: &Pose,
        probe: &mut P,
    ) -> Result<FrameResult, TrackerError> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(TrackerError::OutOfOrder { frame, previous });
            }
        }
        let mut by_class: BTreeMap<&str, Vec<Detection3D>> = BTreeMap::new();
        for d in detections {
            by_class.entry(d.class_label.as_str()).or_default().push(d.clone());
        }
        for class in by_class.keys() {
            if !self.trackers.contains_key(*class) {
                self.trackers
                    .insert(class.to_string(), Tracker::new(self.cfg)?);
            }
        }

        let mut out = Vec::new();
        for (class, tracker) in &mut self.trackers {
            let dets = by_class.get(class.as_str()).map_or(&[][..], |v| v.as_slice());
            let result = tracker.step_with_probe(frame, dets, pose, probe)?;
            for id in tracker.pruned_last_step() {
                self.global_ids.remove(&(class.clone(), *id));
            }
            for t in result.tracks {
                let key = (class.clone(), t.id);
                let next_global = &mut self.next_global;
                let gid = *self.global_ids.entry(key).or_insert_with(|| {
                    *next_global += 1;
                    *next_global - 1
                });
                out.push(TrackOutput { id: gid, ..t });
            }
        }
        out.sort_by_key(|t| t.id);
        self.last_frame = Some(frame);
        Ok(FrameResult { frame, tracks: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io_kitti::ImageFields;

    fn det(x: f64, y: f64, score: f64) -> Detection3D {
        Detection3D {
            frame: 0,
            class_label: "Car".into(),
            bbox: Box3D::new([x, y, 0.8], 4.0, 1.8, 1.5, 0.0, Frame::Lidar).unwrap(),
            score,
            image: ImageFields::default(),
        }
    }

    fn cfg(alpha_legit: f64) -> TrackerConfig {
        let mut c = TrackerConfig::default();
        c.validity.alpha_legit = alpha_legit;
        c
    }

    #[derive(Default)]
    struct Recorder(Vec<Stage>, usize);

    impl StageProbe for Recorder {
        fn begin(&mut self, stage: Stage) {
            self.0.push(stage);
            self.1 += 1;
        }
        fn end(&mut self, stage: Stage) {
            assert_eq!(self.0.last(), Some(&stage));
            self.1 -= 1;
        }
    }

    #[test]
    fn empty_frame_on_empty_cache() {
        let mut t = Tracker::new(cfg(20.0)).unwrap();
        let r = t.step(0, &[], &Pose::identity()).unwrap();
        assert!(r.tracks.is_empty());
        assert!(t.trajectories().is_empty());
    }

    #[test]
    fn birth_is_unconfirmed_and_hidden() {
        let mut t = Tracker::new(cfg(20.0)).unwrap();
        let r = t.step(0, &[det(5.0, 1.0, 0.9)], &Pose::identity()).unwrap();
        assert!(r.tracks.is_empty());
        assert_eq!(t.trajectories().len(), 1);
        assert!(!t.trajectories()[0].is_confirmed());
        assert_eq!(t.stats().born, 1);
    }

    #[test]
    fn three_frame_walk_keeps_one_id() {
        let mut c = cfg(20.0);
        c.tracker.emit_unconfirmed = true;
        let mut t = Tracker::new(c).unwrap();
        let mut ids = Vec::new();
        for f in 0..3u32 {
            let r = t.step(f, &[det(f as f64, 0.0, 0.9)], &Pose::identity()).unwrap();
            assert_eq!(r.tracks.len(), 1);
            ids.push(r.tracks[0].id);
        }
        assert_eq!(ids, vec![0, 0, 0]);
        let v = t.trajectories()[0].filter.velocity();
        assert!(v.x > 0.5 && v.x < 1.5, "vx = {}", v.x);
        assert!(v.y.abs() < 1e-9);
    }

    #[test]
    fn out_of_order_frames_are_rejected() {
        let mut t = Tracker::new(cfg(20.0)).unwrap();
        t.step(4, &[], &Pose::identity()).unwrap();
        assert!(matches!(
            t.step(4, &[], &Pose::identity()),
            Err(TrackerError::OutOfOrder { frame: 4, previous: 4 })
        ));
    }

    #[test]
    fn stages_run_in_pipeline_order() {
        let mut t = Tracker::new(cfg(20.0)).unwrap();
        for f in 0..5u32 {
            let mut rec = Recorder::default();
            let dets = if f % 2 == 0 { vec![det(0.0, 0.0, 0.9)] } else { vec![] };
            t.step_with_probe(f, &dets, &Pose::identity(), &mut rec).unwrap();
            assert_eq!(rec.0, Stage::ALL.to_vec());
            assert_eq!(rec.1, 0);
        }
    }

    fn fresh_trajectory(c: &TrackerConfig) -> Trajectory {
        let params = FilterParams::constant_acceleration(&c.filter);
        Trajectory {
            id: 0,
            filter: kalman::init_state(Vector2::zeros(), &params),
            certainty: CertaintyState::confirmed_at(0),
            last_box: det(0.0, 0.0, 1.0).bbox,
            birth_frame: 0,
            last_update_frame: 0,
            class_label: "Car".into(),
            last_score: 1.0,
        }
    }

    #[test]
    fn termination_threshold_is_strict() {
        let c = cfg(20.0);
        let mut traj = fresh_trajectory(&c);
        assert!(!terminate_check(&traj, &c));
        traj.filter.p[(0, 0)] = 4.0;
        assert!(!terminate_check(&traj, &c));
        traj.filter.p[(1, 1)] = 4.0 + 1e-12;
        assert!(terminate_check(&traj, &c));
    }

    /// Frames of pure prediction until the covariance recursion crosses the
    /// threshold, computed independently of the tracker.
    fn predicts_until_termination(c: &TrackerConfig, mut p: kalman::StateCovariance) -> usize {
        let params = FilterParams::constant_acceleration(&c.filter);
        let mut n = 0;
        while p[(0, 0)] <= c.tracker.sigma_est_certainty && p[(1, 1)] <= c.tracker.sigma_est_certainty {
            p = params.f * p * params.f.transpose() + params.q;
            n += 1;
        }
        n
    }

    #[test]
    fn predict_only_pruning_matches_covariance_recursion() {
        let c = cfg(1.0);
        let params = FilterParams::constant_acceleration(&c.filter);
        let expected = predicts_until_termination(&c, params.p0);
        let mut t = Tracker::new(c).unwrap();
        t.step(0, &[det(0.0, 0.0, 2.0)], &Pose::identity()).unwrap();
        // Spawn predicts once; every later empty frame predicts once more.
        let mut frame = 0;
        while !t.trajectories().is_empty() {
            frame += 1;
            t.step(frame, &[], &Pose::identity()).unwrap();
        }
        assert_eq!(frame as usize + 1, expected);
    }

    fn lifetime_after_abandonment(observations: u32) -> u32 {
        let mut c = cfg(1e6);
        c.tracker.emit_unconfirmed = true;
        let mut t = Tracker::new(c).unwrap();
        for f in 0..observations {
            t.step(f, &[det(0.2 * f as f64, 0.0, 0.9)], &Pose::identity()).unwrap();
        }
        let mut f = observations;
        while !t.trajectories().is_empty() {
            t.step(f, &[], &Pose::identity()).unwrap();
            f += 1;
        }
        f - observations
    }

    #[test]
    fn short_lived_tracks_are_pruned_before_well_observed_ones() {
        let ghost = lifetime_after_abandonment(2);
        let legit = lifetime_after_abandonment(30);
        assert!(ghost < legit, "ghost {ghost} vs legit {legit}");
    }

    #[test]
    fn occluded_object_reacquires_its_id() {
        let mut c = cfg(5.0);
        c.tracker.emit_unconfirmed = true;
        let mut t = Tracker::new(c).unwrap();
        let pos = |f: u32| 0.5 * f as f64;
        let mut seen = Vec::new();
        for f in 0..=50u32 {
            let dets = if (21..=35).contains(&f) { vec![] } else { vec![det(pos(f), 2.0, 0.9)] };
            let r = t.step(f, &dets, &Pose::identity()).unwrap();
            if !dets.is_empty() {
                seen.extend(r.tracks.iter().map(|o| o.id));
            }
        }
        assert!(seen.iter().all(|id| *id == 0), "{seen:?}");
        assert_eq!(t.stats().born, 1);
    }

    #[test]
    fn pruned_ids_never_return() {
        let mut c = cfg(1.0);
        c.tracker.emit_unconfirmed = true;
        let mut t = Tracker::new(c).unwrap();
        let mut pruned = Vec::new();
        let mut emitted = Vec::new();
        for f in 0..60u32 {
            let dets = if f % 7 == 0 { vec![det(0.0, 0.0, 0.9)] } else { vec![] };
            let r = t.step(f, &dets, &Pose::identity()).unwrap();
            for o in &r.tracks {
                assert!(!pruned.contains(&o.id));
                emitted.push(o.id);
            }
            pruned.extend_from_slice(t.pruned_last_step());
        }
        assert!(!pruned.is_empty());
        assert!(emitted.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn world_frame_gating_follows_the_pose() {
        let mut c = cfg(1.0);
        c.tracker.emit_unconfirmed = true;
        let mut t = Tracker::new(c).unwrap();
        // A static world object seen from an ego vehicle driving along x.
        for f in 0..10u32 {
            let pose = Pose::from_translation([2.0 * f as f64, 0.0, 0.0]);
            let r = t.step(f, &[det(30.0 - 2.0 * f as f64, 0.0, 0.9)], &pose).unwrap();
            assert_eq!(r.tracks.len(), 1);
            assert!((r.tracks[0].bbox.cx - 30.0).abs() < 1e-9);
            assert_eq!(r.tracks[0].bbox.frame, Frame::World);
        }
        assert_eq!(t.stats().born, 1);
    }

    #[test]
    fn disabled_validity_confirms_at_birth() {
        let mut c = cfg(20.0);
        c.validity.enabled = false;
        let mut t = Tracker::new(c).unwrap();
        let r = t.step(0, &[det(0.0, 0.0, 0.1)], &Pose::identity()).unwrap();
        assert_eq!(r.tracks.len(), 1);
        assert!(r.tracks[0].confirmed);
    }

    #[test]
    fn multi_class_tracks_classes_independently() {
        let mut c = cfg(1.0);
        c.tracker.emit_unconfirmed = true;
        let mut t = MultiClassTracker::new(c).unwrap();
        let mut ped = det(0.0, 0.0, 0.9);
        ped.class_label = "Pedestrian".into();
        let car = det(0.5, 0.0, 0.9);
        let r = t.step(0, &[car.clone(), ped.clone()], &Pose::identity()).unwrap();
        assert_eq!(r.tracks.len(), 2);
        let r2 = t.step(1, &[car, ped], &Pose::identity()).unwrap();
        let ids: Vec<_> = r.tracks.iter().map(|o| (o.id, o.class_label.clone())).collect();
        let ids2: Vec<_> = r2.tracks.iter().map(|o| (o.id, o.class_label.clone())).collect();
        assert_eq!(ids, ids2);
        assert_eq!(t.stats().born, 2);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = cfg(20.0);
        c.tracker.sigma_est_certainty = 0.0;
        assert!(Tracker::new(c).is_err());
        let mut c = cfg(20.0);
        c.gate.alpha_conf = 1.0;
        assert!(Tracker::new(c).is_err());
    }
}
