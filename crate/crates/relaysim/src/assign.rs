//! Maximum-weight bipartite assignment with optional rows, via the
//! potential-based shortest-augmenting-path form of the Hungarian method.

use crate::num::Scalar;

/// Assigns each row to at most one column maximizing total weight.
///
/// `weights[r][c]` must be finite and non-negative; a row is left
/// unassigned when every remaining column would contribute zero. Ties are
/// resolved toward lower column indices (columns are scanned in order), and
/// rows are augmented in index order, so the result is deterministic.
pub fn max_weight_assignment<T: Scalar>(weights: &[Vec<T>]) -> Vec<Option<usize>> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m = weights[0].len();
    // One dummy column per row lets any row opt out at zero weight.
    let cols = m + n;

    // Costs are negated weights; potentials follow the classic 1-indexed
    // formulation.
    let cost = |r: usize, c: usize| -> T {
        if c < m {
            -weights[r][c]
        } else {
            T::zero()
        }
    };

    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); cols + 1];
    let mut matched_row = vec![0usize; cols + 1]; // column -> row (1-indexed, 0 = free)
    let mut way = vec![0usize; cols + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=cols {
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
            for j in 0..=cols {
                if used[j] {
                    u[matched_row[j]] = u[matched_row[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; n];
    for j in 1..=m {
        let r = matched_row[j];
        if r != 0 && weights[r - 1][j - 1] > T::zero() {
            out[r - 1] = Some(j - 1);
        }
    }
    out
}

/// Total weight of an assignment.
pub fn assignment_weight<T: Scalar>(weights: &[Vec<T>], assignment: &[Option<usize>]) -> T {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| weights[r][c]))
        .fold(T::zero(), |acc, w| acc + w)
}
