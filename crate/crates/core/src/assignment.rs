//! Exact linear assignment (Hungarian method with potentials, O(n³)).

use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square cost matrix given row-major.
/// Returns `perm` with row `i` assigned to column `perm[i]`, and the total
/// cost summed in row order.
pub fn solve(n: usize, cost: &[f64]) -> Result<(Vec<usize>, f64)> {
    if cost.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "cost matrix must have {} entries, got {}",
            n * n,
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "cost matrix has non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // 1-based shortest augmenting path formulation; column 0 is a sentinel
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
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
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
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok((perm, total))
}
