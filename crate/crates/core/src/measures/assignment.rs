use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Hungarian method on a square cost matrix. Returns `assign[row] = col` and the total cost.
pub fn solve_assignment<T: Real>(cost: &Matrix<T>) -> Result<(Vec<usize>, T)> {
    let n = cost.rows();
    if n != cost.cols() {
        return Err(Error::DimensionMismatch { expected: n, found: cost.cols() });
    }
    if n == 0 {
        return Ok((Vec::new(), T::zero()));
    }
    // 1-based potentials, column 0 is a sentinel.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::Infeasible("assignment costs are not finite".into()));
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
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok((assign, total))
}
