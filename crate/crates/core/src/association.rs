//! Detection-to-trajectory association by globally optimal ground-plane
//! distance, followed by a `sigma` rejection gate.

use serde::{Deserialize, Serialize};

use crate::assignment::{solve, CostMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GatingMode {
    /// Solve on raw distances, then drop optimal pairs farther than `sigma`.
    #[default]
    DemoteAfterSolve,
    /// Price pairs beyond `sigma` out of the problem before solving.
    MaskBeforeSolve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub track_id: u64,
    pub detection: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentResult {
    pub matches: Vec<Match>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_trajectories: Vec<u64>,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn associate(tracks: &[(u64, [f64; 2])], dets: &[[f64; 2]], sigma: f64) -> AssignmentResult {
    associate_with(tracks, dets, sigma, GatingMode::DemoteAfterSolve)
}

/// Rows are processed in ascending track id, columns in detection order, so
/// results are deterministic for a given input regardless of caller order.
/// Matches are returned sorted by track id; unmatched lists are ascending.
pub fn associate_with(
    tracks: &[(u64, [f64; 2])],
    dets: &[[f64; 2]],
    sigma: f64,
    mode: GatingMode,
) -> AssignmentResult {
    let mut order: Vec<usize> = (0..tracks.len()).collect();
    order.sort_by_key(|&i| tracks[i].0);

    let raw = CostMatrix::from_fn(order.len(), dets.len(), |r, c| {
        distance(tracks[order[r]].1, dets[c])
    });
    let assignment = match mode {
        GatingMode::DemoteAfterSolve => solve(&raw),
        GatingMode::MaskBeforeSolve => {
            // Any single infeasible pair costs more than every feasible pair
            // combined, so the solver first maximizes feasible matches.
            let penalty = sigma * (order.len().max(dets.len()) as f64 + 1.0) + 1.0;
            let masked = CostMatrix::from_fn(raw.rows(), raw.cols(), |r, c| {
                let d = raw.get(r, c);
                if d > sigma {
                    penalty
                } else {
                    d
                }
            });
            solve(&masked)
        }
    };

    let mut result = AssignmentResult::default();
    let mut det_taken = vec![false; dets.len()];
    for (r, col) in assignment.iter().enumerate() {
        let id = tracks[order[r]].0;
        match col {
            Some(c) if raw.get(r, *c) <= sigma => {
                det_taken[*c] = true;
                result.matches.push(Match {
                    track_id: id,
                    detection: *c,
                    distance: raw.get(r, *c),
                });
            }
            _ => result.unmatched_trajectories.push(id),
        }
    }
    result.unmatched_detections = (0..dets.len()).filter(|c| !det_taken[*c]).collect();
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::oracle::brute_force_min;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_match() {
        let r = associate(&[(0, [0.0, 0.0])], &[[1.0, 0.0]], 4.0);
        assert_eq!(
            r.matches,
            vec![Match {
                track_id: 0,
                detection: 0,
                distance: 1.0
            }]
        );
        assert!(r.unmatched_detections.is_empty() && r.unmatched_trajectories.is_empty());
    }

    #[test]
    fn far_pair_is_rejected() {
        let r = associate(&[(0, [0.0, 0.0])], &[[5.0, 0.0]], 4.0);
        assert!(r.matches.is_empty());
        assert_eq!(r.unmatched_detections, vec![0]);
        assert_eq!(r.unmatched_trajectories, vec![0]);
    }

    #[test]
    fn empty_sides() {
        let r = associate(&[], &[[0.0, 0.0], [1.0, 1.0]], 4.0);
        assert_eq!(r.unmatched_detections, vec![0, 1]);
        let r = associate(&[(3, [0.0, 0.0])], &[], 4.0);
        assert_eq!(r.unmatched_trajectories, vec![3]);
    }

    #[test]
    fn masking_recovers_a_feasible_pair_that_demotion_loses() {
        // Optimum: 1→(0,0) at 0 m and 2→(-1.5,1) at 4.61 m (total 4.61).
        // Both pairs of the swapped assignment (1.80 m, 3 m) are feasible.
        let tracks = [(1, [0.0, 0.0]), (2, [3.0, 0.0])];
        let dets = [[0.0, 0.0], [-1.5, 1.0]];
        let demoted = associate_with(&tracks, &dets, 4.0, GatingMode::DemoteAfterSolve);
        let masked = associate_with(&tracks, &dets, 4.0, GatingMode::MaskBeforeSolve);
        assert_eq!(demoted.matches.len(), 1);
        assert_eq!(masked.matches.len(), 2);
        assert!(masked.matches.iter().all(|m| m.distance <= 4.0));
    }

    #[test]
    fn three_by_three_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let tracks: Vec<_> = (0..3u64)
                .map(|i| (i, [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]))
                .collect();
            let dets: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
                .collect();
            let r = associate(&tracks, &dets, 1e9);
            let total: f64 = r.matches.iter().map(|m| m.distance).sum();
            let costs = CostMatrix::from_fn(3, 3, |a, b| distance(tracks[a].1, dets[b]));
            assert!((total - brute_force_min(&costs)).abs() < 1e-9);
        }
    }

    fn arb_instance() -> impl Strategy<Value = (Vec<(u64, [f64; 2])>, Vec<[f64; 2]>, f64)> {
        (
            proptest::collection::vec([-20.0..20.0f64, -20.0..20.0f64], 0..8),
            proptest::collection::vec([-20.0..20.0f64, -20.0..20.0f64], 0..8),
            0.5..10.0f64,
        )
            .prop_map(|(t, d, s)| {
                let tracks = t.into_iter().enumerate().map(|(i, p)| (10 + 3 * i as u64, p)).collect();
                (tracks, d, s)
            })
    }

    proptest! {
        #[test]
        fn structure_and_sigma_soundness((tracks, dets, sigma) in arb_instance(), masked in any::<bool>()) {
            let mode = if masked { GatingMode::MaskBeforeSolve } else { GatingMode::DemoteAfterSolve };
            let r = associate_with(&tracks, &dets, sigma, mode);
            prop_assert!(r.matches.iter().all(|m| m.distance <= sigma));
            let mut ids: Vec<u64> = r.matches.iter().map(|m| m.track_id)
                .chain(r.unmatched_trajectories.iter().copied()).collect();
            ids.sort_unstable();
            let mut expected: Vec<u64> = tracks.iter().map(|t| t.0).collect();
            expected.sort_unstable();
            prop_assert_eq!(ids, expected);
            let mut cols: Vec<usize> = r.matches.iter().map(|m| m.detection)
                .chain(r.unmatched_detections.iter().copied()).collect();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..dets.len()).collect::<Vec<_>>());
        }

        #[test]
        fn optimal_before_demotion((tracks, dets, _s) in arb_instance()) {
            let r = associate(&tracks, &dets, f64::MAX);
            let total: f64 = r.matches.iter().map(|m| m.distance).sum();
            let costs = CostMatrix::from_fn(tracks.len(), dets.len(), |a, b| distance(tracks[a].1, dets[b]));
            let best = if tracks.is_empty() || dets.is_empty() { 0.0 } else { brute_force_min(&costs) };
            prop_assert!((total - best).abs() < 1e-9);
        }

        #[test]
        fn permutation_equivariant((tracks, dets, sigma) in arb_instance(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..dets.len()).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<[f64; 2]> = perm.iter().map(|&i| dets[i]).collect();
            let mut shuffled_tracks = tracks.clone();
            shuffled_tracks.shuffle(&mut rng);
            let key = |r: &AssignmentResult, d: &[[f64; 2]]| {
                let mut v: Vec<(u64, [u64; 2])> = r.matches.iter()
                    .map(|m| (m.track_id, [d[m.detection][0].to_bits(), d[m.detection][1].to_bits()]))
                    .collect();
                v.sort();
                v
            };
            let a = associate(&tracks, &dets, sigma);
            let b = associate(&shuffled_tracks, &shuffled, sigma);
            // Random continuous positions make cost ties a measure-zero event.
            prop_assert_eq!(key(&a, &dets), key(&b, &shuffled));
        }
    }
}
