//! Dense minimum-cost assignment (Hungarian method with row/column
//! potentials, O(n³)).
//!
//! Rectangular problems are padded to square with a constant sentinel cost;
//! since every padded row (or column) carries the same constant, the optimum
//! over the real entries is unaffected and sentinel pairings are reported as
//! unassigned.

/// Row-major dense cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn max_finite(&self) -> f64 {
        self.data
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

/// Solves the assignment problem; `result[r]` is the column assigned to row
/// `r`, or `None` when the row was paired with padding. All costs must be
/// finite.
pub fn solve(costs: &CostMatrix) -> Vec<Option<usize>> {
    let (rows, cols) = (costs.rows, costs.cols);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    debug_assert!(costs.data.iter().all(|c| c.is_finite()));

    let n = rows.max(cols);
    let sentinel = costs.max_finite().abs() + 1.0;
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            costs.get(i, j)
        } else {
            sentinel
        }
    };

    // Potentials-based shortest augmenting path; 1-based with a virtual
    // column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);

        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i > 0 && i <= rows && j <= cols {
            result[i - 1] = Some(j - 1);
        }
    }
    result
}

/// Total cost of an assignment, summed in row order.
pub fn assignment_cost(costs: &CostMatrix, assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| costs.get(r, c)))
        .sum()
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_degenerate() {
        assert!(solve(&CostMatrix::from_fn(0, 3, |_, _| 1.0)).is_empty());
        assert_eq!(solve(&CostMatrix::from_fn(2, 0, |_, _| 1.0)), vec![None, None]);
        assert_eq!(solve(&CostMatrix::from_fn(1, 1, |_, _| 7.0)), vec![Some(0)]);
    }

    #[test]
    fn classic_three_by_three() {
        let m = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let c = CostMatrix::from_fn(3, 3, |r, k| m[r][k]);
        let a = solve(&c);
        assert_eq!(assignment_cost(&c, &a), 5.0);
        assert_eq!(a, vec![Some(1), Some(0), Some(2)]);
    }

    #[test]
    fn rectangular_leaves_extra_unassigned() {
        let c = CostMatrix::from_fn(3, 1, |r, _| [5.0, 1.0, 3.0][r]);
        assert_eq!(solve(&c), vec![None, Some(0), None]);
        let c = CostMatrix::from_fn(1, 3, |_, k| [5.0, 1.0, 3.0][k]);
        assert_eq!(solve(&c), vec![Some(1)]);
    }

    proptest! {
        // Integer-valued costs keep every partial sum exact in f64, so the
        // comparison with the exhaustive oracle is bit-exact.
        #[test]
        fn matches_brute_force_on_integer_costs(
            rows in 1usize..=6, cols in 1usize..=6,
            seed in proptest::collection::vec(0u32..1000, 36),
        ) {
            let c = CostMatrix::from_fn(rows, cols, |r, k| seed[r * 6 + k] as f64);
            let a = solve(&c);
            prop_assert_eq!(a.iter().filter(|x| x.is_some()).count(), rows.min(cols));
            let mut seen = std::collections::HashSet::new();
            for col in a.iter().flatten() {
                prop_assert!(seen.insert(*col));
            }
            prop_assert_eq!(assignment_cost(&c, &a), oracle::brute_force_min(&c));
        }
    }
}
