//! Synthetic scenarios with exact ground truth.
//!
//! Agents follow constant-acceleration kinematics on the ground plane.
//! Detections are ground-truth centers plus correlated Gaussian jitter, and
//! are withheld during occlusion windows, off-schedule frames and random
//! misses. Ghosts are false detections at fixed places on a fixed schedule.
//! Everything is reproducible from the spec's seed.
//!
//! Labels and detections are expressed in the sensor frame of an ego vehicle
//! moving at constant `ego_velocity`; `poses[t]` maps frame `t`'s sensor
//! coordinates into the world.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Box3D, Frame, Pose};
use crate::io_kitti::{Detection3D, FrameStream, ImageFields, LabeledTrack};

#[derive(Debug, Error, PartialEq)]
#[error("invalid scenario: {}", .0.join("; "))]
pub struct SpecError(pub Vec<String>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    /// `[x, y, vx, vy, ax, ay]` in world coordinates at `spawn`.
    pub initial_state: [f64; 6],
    /// `[length, width, height]`.
    #[serde(default = "default_dims")]
    pub dims: [f64; 3],
    #[serde(default)]
    pub spawn: u32,
    /// First frame the agent no longer exists.
    pub despawn: u32,
    /// Half-open `[start, end)` frame windows without labels or detections.
    #[serde(default)]
    pub occlusions: Vec<[u32; 2]>,
    /// Detect only every n-th frame of the agent's life.
    #[serde(default = "one")]
    pub observe_every: u32,
    /// Fixed detection score instead of a draw.
    #[serde(default)]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Detection-center jitter covariance, m².
    pub jitter_cov: [[f64; 2]; 2],
    pub score_mean: f64,
    pub score_std: f64,
    pub miss_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            jitter_cov: [[0.017221, 0.0], [0.0, 0.005901]],
            score_mean: 0.9,
            score_std: 0.05,
            miss_prob: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GhostSpec {
    pub position: [f64; 2],
    pub start: u32,
    /// Exclusive.
    pub end: u32,
    #[serde(default = "one")]
    pub every: u32,
    /// Defaults to 0.3 × the agents' score mean.
    #[serde(default)]
    pub score_mean: Option<f64>,
    #[serde(default = "default_ghost_std")]
    pub score_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_class")]
    pub class_label: String,
    #[serde(default)]
    pub ego_velocity: [f64; 2],
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub ghosts: Vec<GhostSpec>,
}

fn default_dims() -> [f64; 3] {
    [4.0, 1.8, 1.5]
}

fn one() -> u32 {
    1
}

fn default_ghost_std() -> f64 {
    0.05
}

fn default_class() -> String {
    "Car".into()
}

/// World-frame agent state at one frame, including occluded frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentTruth {
    pub agent: usize,
    pub state: [f64; 6],
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub labels: FrameStream<LabeledTrack>,
    pub detections: FrameStream<Detection3D>,
    pub poses: Vec<Pose>,
    pub truth: FrameStream<AgentTruth>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut errs = Vec::new();
        if self.duration == 0 {
            errs.push("duration must be positive".to_string());
        }
        let [[a, b], [c, d]] = self.noise.jitter_cov;
        let finite = [a, b, c, d].iter().all(|v| v.is_finite());
        if !finite || b != c || a < 0.0 || d < 0.0 || a * d - b * c < -1e-15 {
            errs.push(format!("jitter covariance {:?} is not symmetric PSD", self.noise.jitter_cov));
        }
        if !(0.0..=1.0).contains(&self.noise.miss_prob) {
            errs.push(format!("miss_prob {} outside [0, 1]", self.noise.miss_prob));
        }
        if !(self.noise.score_std >= 0.0) || !self.noise.score_mean.is_finite() {
            errs.push("score distribution must have finite mean and non-negative spread".to_string());
        }
        if !self.ego_velocity.iter().all(|v| v.is_finite()) {
            errs.push("ego_velocity must be finite".to_string());
        }
        for (i, ag) in self.agents.iter().enumerate() {
            if ag.spawn >= ag.despawn || ag.despawn > self.duration {
                errs.push(format!(
                    "agent {i}: lifetime [{}, {}) must be non-empty and end by {}",
                    ag.spawn, ag.despawn, self.duration
                ));
            }
            if !ag.dims.iter().all(|v| v.is_finite() && *v > 0.0) {
                errs.push(format!("agent {i}: dimensions must be positive"));
            }
            if !ag.initial_state.iter().all(|v| v.is_finite()) {
                errs.push(format!("agent {i}: initial state must be finite"));
            }
            if ag.observe_every == 0 {
                errs.push(format!("agent {i}: observe_every must be at least 1"));
            }
            for w in &ag.occlusions {
                if w[0] >= w[1] || w[0] < ag.spawn || w[1] > ag.despawn {
                    errs.push(format!(
                        "agent {i}: occlusion [{}, {}) must be non-empty and within [{}, {})",
                        w[0], w[1], ag.spawn, ag.despawn
                    ));
                }
            }
        }
        for (i, g) in self.ghosts.iter().enumerate() {
            if g.start >= g.end || g.end > self.duration || g.every == 0 {
                errs.push(format!("ghost {i}: schedule [{}, {}) every {} is invalid", g.start, g.end, g.every));
            }
            if !(g.score_std >= 0.0) || !g.position.iter().all(|v| v.is_finite()) {
                errs.push(format!("ghost {i}: position and score spread must be finite"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SpecError(errs))
        }
    }
}

/// Lower-triangular factor of a 2×2 PSD matrix.
fn cholesky2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let l11 = m[0][0].sqrt();
    let l21 = if l11 > 0.0 { m[1][0] / l11 } else { 0.0 };
    let l22 = (m[1][1] - l21 * l21).max(0.0).sqrt();
    [[l11, 0.0], [l21, l22]]
}

fn jitter(rng: &mut ChaCha8Rng, l: &[[f64; 2]; 2]) -> [f64; 2] {
    let n0: f64 = StandardNormal.sample(rng);
    let n1: f64 = StandardNormal.sample(rng);
    [l[0][0] * n0, l[1][0] * n0 + l[1][1] * n1]
}

fn draw_score(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    let n = Normal::new(mean, std).expect("validated spread");
    n.sample(rng).clamp(0.0, 1.0)
}

fn heading(state: &[f64; 6]) -> f64 {
    if state[2] == 0.0 && state[3] == 0.0 {
        0.0
    } else {
        state[3].atan2(state[2])
    }
}

fn ego_pose(spec: &ScenarioSpec, t: u32) -> Pose {
    let t = f64::from(t);
    Pose::from_translation([spec.ego_velocity[0] * t, spec.ego_velocity[1] * t, 0.0])
}

pub fn generate(spec: &ScenarioSpec) -> Result<Generated, SpecError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let chol = cholesky2(spec.noise.jitter_cov);
    let n = spec.duration as usize;
    let mut out = Generated {
        labels: vec![Vec::new(); n],
        detections: vec![Vec::new(); n],
        poses: Vec::with_capacity(n),
        truth: vec![Vec::new(); n],
    };
    let mut states: Vec<[f64; 6]> = spec.agents.iter().map(|a| a.initial_state).collect();
    let ghost_mean = 0.3 * spec.noise.score_mean;

    for t in 0..spec.duration {
        let pose = ego_pose(spec, t);
        let to_sensor = pose.inverse();
        let frame = t as usize;
        for (i, ag) in spec.agents.iter().enumerate() {
            if t < ag.spawn || t >= ag.despawn {
                continue;
            }
            if t > ag.spawn {
                let s = &mut states[i];
                for k in 0..2 {
                    s[k] += s[k + 2] + 0.5 * s[k + 4];
                    s[k + 2] += s[k + 4];
                }
            }
            let s = states[i];
            let visible = !ag.occlusions.iter().any(|w| (w[0]..w[1]).contains(&t));
            out.truth[frame].push(AgentTruth {
                agent: i,
                state: s,
                visible,
            });
            if !visible {
                continue;
            }
            let [l, w, h] = ag.dims;
            let world = Box3D {
                cx: s[0],
                cy: s[1],
                cz: 0.5 * h,
                length: l,
                width: w,
                height: h,
                yaw: heading(&s),
                frame: Frame::World,
            };
            let gt = to_sensor.map_box(&world, Frame::Lidar);
            out.labels[frame].push(LabeledTrack {
                frame: t,
                track_id: i as u64,
                class_label: spec.class_label.clone(),
                bbox: gt,
                score: None,
                image: ImageFields::default(),
            });
            if (t - ag.spawn) % ag.observe_every != 0 {
                continue;
            }
            if spec.noise.miss_prob > 0.0 && rng.random::<f64>() < spec.noise.miss_prob {
                continue;
            }
            let e = jitter(&mut rng, &chol);
            let score = match ag.score {
                Some(s) => s,
                None => draw_score(&mut rng, spec.noise.score_mean, spec.noise.score_std),
            };
            out.detections[frame].push(Detection3D {
                frame: t,
                class_label: spec.class_label.clone(),
                bbox: Box3D {
                    cx: gt.cx + e[0],
                    cy: gt.cy + e[1],
                    ..gt
                },
                score,
                image: ImageFields::default(),
            });
        }
        for g in &spec.ghosts {
            if t < g.start || t >= g.end || (t - g.start) % g.every != 0 {
                continue;
            }
            let e = jitter(&mut rng, &chol);
            let score = draw_score(&mut rng, g.score_mean.unwrap_or(ghost_mean), g.score_std);
            let world = Box3D {
                cx: g.position[0] + e[0],
                cy: g.position[1] + e[1],
                cz: 0.75,
                length: 4.0,
                width: 1.8,
                height: 1.5,
                yaw: 0.0,
                frame: Frame::World,
            };
            out.detections[frame].push(Detection3D {
                frame: t,
                class_label: spec.class_label.clone(),
                bbox: to_sensor.map_box(&world, Frame::Lidar),
                score,
                image: ImageFields::default(),
            });
        }
        out.poses.push(pose);
    }
    Ok(out)
}

pub const SCENARIO_NAMES: &[&str] = &[
    "parked-jitter",
    "long-occlusion",
    "ghost-intermittent",
    "distant-lowscore",
    "noiseless",
    "bench-dense",
];

fn agent(state: [f64; 6], despawn: u32) -> AgentSpec {
    AgentSpec {
        initial_state: state,
        dims: default_dims(),
        spawn: 0,
        despawn,
        occlusions: Vec::new(),
        observe_every: 1,
        score: None,
    }
}

/// Stationary cars that leave the sensor's view for frames 50..80.
fn parked_jitter(seed: u64) -> ScenarioSpec {
    let agents = (0..3)
        .map(|i| AgentSpec {
            occlusions: vec![[50, 80]],
            ..agent([10.0 + 20.0 * i as f64, 5.0, 0.0, 0.0, 0.0, 0.0], 100)
        })
        .collect();
    ScenarioSpec {
        name: "parked-jitter".into(),
        duration: 100,
        seed,
        class_label: default_class(),
        ego_velocity: [0.0, 0.0],
        noise: NoiseSpec::default(),
        agents,
        ghosts: Vec::new(),
    }
}

/// One car hidden for 50 consecutive frames while the ego vehicle drives.
fn long_occlusion(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        name: "long-occlusion".into(),
        duration: 160,
        seed,
        class_label: default_class(),
        ego_velocity: [0.5, 0.0],
        noise: NoiseSpec::default(),
        agents: vec![AgentSpec {
            occlusions: vec![[60, 110]],
            ..agent([15.0, 4.0, 0.8, 0.1, 0.0, 0.0], 160)
        }],
        ghosts: Vec::new(),
    }
}

/// Four cars plus eight low-score ghosts flickering on every third frame.
fn ghost_intermittent(seed: u64) -> ScenarioSpec {
    let agents = vec![
        agent([0.0, 0.0, 0.6, 0.0, 0.0, 0.0], 200),
        agent([0.0, 8.0, 0.5, 0.0, 0.0, 0.0], 200),
        agent([20.0, -8.0, 0.4, 0.0, 0.0, 0.0], 200),
        agent([40.0, 16.0, 0.0, 0.0, 0.0, 0.0], 200),
    ];
    let ghosts = (0..8)
        .map(|i| GhostSpec {
            position: [-40.0 - 12.0 * (i % 4) as f64, -30.0 + 60.0 * (i / 4) as f64],
            start: i % 3,
            end: 200,
            every: 3,
            score_mean: None,
            score_std: default_ghost_std(),
        })
        .collect();
    ScenarioSpec {
        name: "ghost-intermittent".into(),
        duration: 200,
        seed,
        class_label: default_class(),
        ego_velocity: [0.0, 0.0],
        noise: NoiseSpec {
            jitter_cov: [[0.039156, 0.0], [0.0, 0.014357]],
            ..NoiseSpec::default()
        },
        agents,
        ghosts,
    }
}

/// Two distant weak objects: one seen every frame, one every third frame.
fn distant_lowscore(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        name: "distant-lowscore".into(),
        duration: 200,
        seed,
        class_label: default_class(),
        ego_velocity: [0.0, 0.0],
        noise: NoiseSpec {
            jitter_cov: [[2.0 * 0.017221, 0.0], [0.0, 2.0 * 0.005901]],
            ..NoiseSpec::default()
        },
        agents: vec![
            AgentSpec {
                score: Some(0.4),
                ..agent([60.0, 10.0, 0.1, 0.0, 0.0, 0.0], 200)
            },
            AgentSpec {
                score: Some(0.4),
                observe_every: 3,
                ..agent([65.0, -20.0, -0.1, 0.0, 0.0, 0.0], 200)
            },
        ],
        ghosts: Vec::new(),
    }
}

/// Perfect detections of well-separated movers.
fn noiseless(seed: u64) -> ScenarioSpec {
    let agents = vec![
        agent([0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 120),
        agent([5.0, 10.0, 0.5, 0.0, 0.0, 0.0], 120),
        agent([60.0, -10.0, -0.7, 0.05, 0.0, 0.0], 120),
        agent([30.0, 25.0, 0.0, 0.0, 0.0, 0.0], 120),
        agent([-20.0, -30.0, 0.2, 0.0, 0.004, 0.0], 120),
    ];
    ScenarioSpec {
        name: "noiseless".into(),
        duration: 120,
        seed,
        class_label: default_class(),
        ego_velocity: [0.0, 0.0],
        noise: NoiseSpec {
            jitter_cov: [[0.0, 0.0], [0.0, 0.0]],
            score_std: 0.0,
            ..NoiseSpec::default()
        },
        agents,
        ghosts: Vec::new(),
    }
}

/// About 30 detections and 40 live trajectories per frame for 7,500 frames.
fn bench_dense(seed: u64) -> ScenarioSpec {
    const SLOTS: usize = 30;
    const LIFETIME: u32 = 200;
    const DURATION: u32 = 7500;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut agents = Vec::new();
    for slot in 0..SLOTS {
        let cx = 25.0 * (slot % 6) as f64;
        let cy = 25.0 * (slot / 6) as f64;
        // Stagger slot phases so births and deaths spread over time.
        let mut start = (slot as u32 * LIFETIME) / SLOTS as u32;
        if start > 0 {
            agents.push(AgentSpec {
                spawn: 0,
                ..agent([cx, cy, 0.0, 0.0, 0.0, 0.0], start)
            });
        }
        while start < DURATION {
            let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let end = (start + LIFETIME).min(DURATION);
            agents.push(AgentSpec {
                spawn: start,
                ..agent([cx, cy, 0.05 * heading.cos(), 0.05 * heading.sin(), 0.0, 0.0], end)
            });
            start = end;
        }
    }
    let ghosts = (0..8)
        .map(|i| GhostSpec {
            position: [-30.0 - 10.0 * i as f64, 150.0],
            start: i % 3,
            end: DURATION,
            every: 3,
            score_mean: None,
            score_std: default_ghost_std(),
        })
        .collect();
    ScenarioSpec {
        name: "bench-dense".into(),
        duration: DURATION,
        seed,
        class_label: default_class(),
        ego_velocity: [0.0, 0.0],
        noise: NoiseSpec {
            miss_prob: 0.02,
            ..NoiseSpec::default()
        },
        agents,
        ghosts,
    }
}

pub fn scenario(name: &str, seed: u64) -> Option<ScenarioSpec> {
    Some(match name {
        "parked-jitter" => parked_jitter(seed),
        "long-occlusion" => long_occlusion(seed),
        "ghost-intermittent" => ghost_intermittent(seed),
        "distant-lowscore" => distant_lowscore(seed),
        "noiseless" => noiseless(seed),
        "bench-dense" => bench_dense(seed),
        _ => return None,
    })
}

pub fn scenario_library() -> Vec<ScenarioSpec> {
    SCENARIO_NAMES
        .iter()
        .map(|n| scenario(n, 0).expect("listed scenario"))
        .collect()
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, toml::de::Error> {
    toml::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_model::fit_deviation_stats;

    fn one_agent(noise: NoiseSpec, duration: u32) -> ScenarioSpec {
        ScenarioSpec {
            name: "t".into(),
            duration,
            seed: 11,
            class_label: default_class(),
            ego_velocity: [0.0, 0.0],
            noise,
            agents: vec![agent([1.0, 2.0, 0.3, -0.2, 0.01, 0.02], duration)],
            ghosts: Vec::new(),
        }
    }

    #[test]
    fn library_validates() {
        for s in scenario_library() {
            s.validate().unwrap_or_else(|e| panic!("{}: {e}", s.name));
        }
        assert!(scenario("nope", 0).is_none());
    }

    #[test]
    fn long_occlusion_has_one_fifty_frame_window() {
        let s = scenario("long-occlusion", 0).unwrap();
        let windows: Vec<_> = s.agents.iter().flat_map(|a| a.occlusions.clone()).collect();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0][1] - windows[0][0], 50);
    }

    #[test]
    fn ghosts_follow_every_third_frame() {
        let s = scenario("ghost-intermittent", 0).unwrap();
        assert!(s.ghosts.iter().all(|g| g.every == 3));
        let gen = generate(&s).unwrap();
        let ghost_x = |d: &Detection3D| d.bbox.cx < -30.0;
        for (t, dets) in gen.detections.iter().enumerate() {
            let n = dets.iter().filter(|d| ghost_x(d)).count();
            let t = t as u32;
            let expected = s.ghosts.iter().filter(|g| t >= g.start && (t - g.start) % 3 == 0).count();
            assert_eq!(n, expected, "frame {t}");
        }
    }

    #[test]
    fn noiseless_detections_equal_ground_truth() {
        let gen = generate(&scenario("noiseless", 0).unwrap()).unwrap();
        for (dets, labels) in gen.detections.iter().zip(&gen.labels) {
            assert_eq!(dets.len(), labels.len());
            for (d, l) in dets.iter().zip(labels) {
                assert_eq!(d.bbox, l.bbox);
            }
        }
    }

    #[test]
    fn same_seed_same_streams() {
        let s = scenario("ghost-intermittent", 5).unwrap();
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = scenario("ghost-intermittent", 6).unwrap();
        assert_ne!(generate(&s).unwrap().detections, generate(&other).unwrap().detections);
    }

    #[test]
    fn ground_truth_obeys_constant_acceleration() {
        let spec = one_agent(NoiseSpec::default(), 50);
        let gen = generate(&spec).unwrap();
        for w in gen.truth.windows(2) {
            let (a, b) = (w[0][0].state, w[1][0].state);
            for k in 0..2 {
                assert_eq!(b[k], a[k] + (a[k + 2] + 0.5 * a[k + 4]));
                assert_eq!(b[k + 2], a[k + 2] + a[k + 4]);
                assert_eq!(b[k + 4], a[k + 4]);
            }
        }
    }

    #[test]
    fn ego_motion_moves_sensor_frame_labels() {
        let mut spec = one_agent(NoiseSpec::default(), 10);
        spec.agents[0].initial_state = [10.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        spec.ego_velocity = [1.0, 0.0];
        let gen = generate(&spec).unwrap();
        for (t, labels) in gen.labels.iter().enumerate() {
            assert!((labels[0].bbox.cx - (10.0 - t as f64)).abs() < 1e-12);
            let world = gen.poses[t].map_box(&labels[0].bbox, Frame::World);
            assert!((world.cx - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jitter_covariance_converges() {
        let cov = [[0.017221, 0.004], [0.004, 0.005901]];
        let spec = one_agent(
            NoiseSpec {
                jitter_cov: cov,
                ..NoiseSpec::default()
            },
            10_000,
        );
        let gen = generate(&spec).unwrap();
        let devs: Vec<[f64; 2]> = gen
            .detections
            .iter()
            .zip(&gen.labels)
            .map(|(d, l)| [d[0].bbox.cx - l[0].bbox.cx, d[0].bbox.cy - l[0].bbox.cy])
            .collect();
        let n = devs.len() as f64;
        let mean = |k: usize| devs.iter().map(|d| d[k]).sum::<f64>() / n;
        let (mx, my) = (mean(0), mean(1));
        let cxx = devs.iter().map(|d| (d[0] - mx).powi(2)).sum::<f64>() / n;
        let cyy = devs.iter().map(|d| (d[1] - my).powi(2)).sum::<f64>() / n;
        let cxy = devs.iter().map(|d| (d[0] - mx) * (d[1] - my)).sum::<f64>() / n;
        assert!((cxx / cov[0][0] - 1.0).abs() < 0.1, "{cxx}");
        assert!((cyy / cov[1][1] - 1.0).abs() < 0.1, "{cyy}");
        assert!((cxy / cov[0][1] - 1.0).abs() < 0.1, "{cxy}");
    }

    #[test]
    fn fitted_noise_recovers_generator_variances() {
        let spec = one_agent(NoiseSpec::default(), 5000);
        let gen = generate(&spec).unwrap();
        let pairs: Vec<_> = gen
            .detections
            .iter()
            .zip(&gen.labels)
            .map(|(d, l)| (d[0].bbox, l[0].bbox))
            .collect();
        let stats = fit_deviation_stats(&pairs).unwrap();
        assert!((stats.var_x / 0.017221 - 1.0).abs() < 0.15);
        assert!((stats.var_y / 0.005901 - 1.0).abs() < 0.15);
    }

    #[test]
    fn occlusion_removes_labels_and_detections() {
        let gen = generate(&scenario("long-occlusion", 1).unwrap()).unwrap();
        for t in 0..160 {
            let hidden = (60..110).contains(&t);
            assert_eq!(gen.labels[t].is_empty(), hidden);
            assert_eq!(gen.detections[t].is_empty(), hidden);
            assert_eq!(gen.truth[t].len(), 1);
        }
    }

    #[test]
    fn invalid_specs_list_every_violation() {
        let mut spec = one_agent(NoiseSpec::default(), 10);
        spec.noise.jitter_cov = [[-1.0, 0.0], [0.0, 1.0]];
        spec.agents[0].occlusions.push([5, 20]);
        spec.agents[0].observe_every = 0;
        let err = spec.validate().unwrap_err();
        assert_eq!(err.0.len(), 3, "{err}");
    }

    #[test]
    fn specs_load_from_toml() {
        let text = r#"
name = "custom"
duration = 20
seed = 3

[[agents]]
initial_state = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
despawn = 20
occlusions = [[5, 8]]

[[ghosts]]
position = [30.0, 30.0]
start = 0
end = 20
every = 3
"#;
        let spec = parse_scenario(text).unwrap();
        let gen = generate(&spec).unwrap();
        assert_eq!(gen.labels.iter().map(Vec::len).sum::<usize>(), 17);
        assert_eq!(gen.detections.iter().map(Vec::len).sum::<usize>(), 17 + 7);
    }

    #[test]
    fn bench_density_is_as_advertised() {
        let gen = generate(&scenario("bench-dense", 0).unwrap()).unwrap();
        assert_eq!(gen.detections.len(), 7500);
        let mean = gen.detections.iter().map(Vec::len).sum::<usize>() as f64 / 7500.0;
        assert!((28.0..=34.0).contains(&mean), "{mean}");
    }
}
