//! Minimum-cost assignment via the Jonker-Volgenant form of the Hungarian
//! algorithm (potentials plus shortest augmenting paths, O(n^3)).

use crate::ndmath::Matrix;
use crate::{Error, Result};

/// An injective assignment of the shorter axis of a cost matrix onto the
/// longer one. `mapping[i]` is the partner of index `i` on the shorter side;
/// `total_score` sums the selected cost entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    pub total_score: f64,
}

/// Solve the rectangular assignment problem for a finite cost matrix. Rows
/// are matched to columns when `rows <= cols`; otherwise the matrix is
/// transposed internally, which is equivalent to padding with constant rows.
pub fn hungarian(cost: &Matrix) -> Result<Assignment> {
    if cost.rows() == 0 || cost.cols() == 0 {
        return Err(Error::InvalidArgument("empty cost matrix".into()));
    }
    if !cost.is_finite() {
        return Err(Error::InvalidArgument("non-finite cost matrix".into()));
    }
    let transposed = cost.rows() > cost.cols();
    let work = if transposed { cost.transpose() } else { cost.clone() };
    let mapping = solve(&work);
    let total_score = mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| work.at(i, j))
        .sum();
    Ok(Assignment {
        mapping,
        total_score,
    })
}

/// Classic 1-indexed potentials formulation; requires rows <= cols.
fn solve(cost: &Matrix) -> Vec<usize> {
    let n = cost.rows();
    let m = cost.cols();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    // Row (1-based) currently assigned to each column; 0 means free.
    let mut assigned = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        assigned[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = assigned[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[assigned[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned[j0] == 0 {
                break;
            }
        }
        // Augment along the recorded path.
        loop {
            let j1 = way[j0];
            assigned[j0] = assigned[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![usize::MAX; n];
    for j in 1..=m {
        if assigned[j] > 0 {
            mapping[assigned[j] - 1] = j - 1;
        }
    }
    mapping
}
