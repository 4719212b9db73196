//! Transportation simplex (MODI) for the discrete Kantorovich problem.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Optimal plan and its cost.
#[derive(Debug, Clone)]
pub struct TransportPlan<T> {
    pub flow: Matrix<T>,
    pub cost: T,
    pub pivots: usize,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 64;

struct Basis<T> {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<T>,
}

impl<T: Real> Basis<T> {
    /// North-west corner rule. Always yields exactly `m + n - 1` cells forming a spanning tree.
    fn north_west(a: &[T], b: &[T]) -> Self {
        let (m, n) = (a.len(), b.len());
        let mut s = a.to_vec();
        let mut d = b.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        loop {
            let q = s[i].min(d[j]).max(T::zero());
            s[i] -= q;
            d[j] -= q;
            cells.push((i, j));
            flow.push(q);
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cells, flow }
    }

    /// Adjacency over the bipartite tree: rows are nodes `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, cost: &Matrix<T>, adj: &[Vec<(usize, usize)>]) -> (Vec<T>, Vec<T>) {
        let mut u = vec![T::zero(); self.m];
        let mut v = vec![T::zero(); self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            for &(next, k) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = self.cells[k];
                if node < self.m {
                    v[j] = cost[(i, j)] - u[i];
                } else {
                    u[i] = cost[(i, j)] - v[j];
                }
                queue.push_back(next);
            }
        }
        (u, v)
    }

    /// Basis cell indices along the tree path from row `p` to column `q`.
    fn path(&self, adj: &[Vec<(usize, usize)>], p: usize, q: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = VecDeque::from([p]);
        seen[p] = true;
        let goal = self.m + q;
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = goal;
        while node != p {
            let (prev, k) = parent[node].expect("basis is a spanning tree");
            edges.push(k);
            node = prev;
        }
        edges.reverse();
        edges
    }
}

/// Minimises `sum c_ij x_ij` subject to row sums `a`, column sums `b`, `x >= 0`.
pub fn solve_transport<T: Real>(a: &[T], b: &[T], cost: &Matrix<T>) -> Result<TransportPlan<T>> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::Infeasible("empty marginal".into()));
    }
    if cost.rows() != m || cost.cols() != n {
        return Err(Error::DimensionMismatch { expected: m * n, found: cost.rows() * cost.cols() });
    }
    if a.iter().chain(b).any(|&w| !(w >= T::zero())) {
        return Err(Error::Infeasible("negative or non-finite marginal mass".into()));
    }
    let sa: T = a.iter().copied().sum();
    let sb: T = b.iter().copied().sum();
    let mass_tol = T::lit(1e-9).max(T::epsilon() * T::count(16 * (m + n)));
    if (sa - sb).abs() > mass_tol * sa.max(T::one()) {
        return Err(Error::Infeasible(format!("marginal masses differ: {sa} vs {sb}")));
    }

    let mut basis = Basis::north_west(a, b);
    let scale = cost.max_abs().max(T::one());
    let tol = T::epsilon() * T::lit(64.0) * scale;
    let cap = 50 * (m + n) * (m + n) + 1000;
    let mut streak = 0usize;
    let mut pivots = 0usize;

    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(cost, &adj);
        let bland = streak >= DEGENERATE_STREAK;

        let mut entering = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = cost[(i, j)] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((p, q)) = entering else { break };
        if pivots >= cap {
            return Err(Error::NoConvergence(pivots));
        }
        pivots += 1;

        // Cycle: entering cell gains, then path cells alternate lose / gain starting at row p.
        let path = basis.path(&adj, p, q);
        let mut theta = T::infinity();
        let mut leave = None;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = basis.flow[k];
                let better = match leave {
                    None => true,
                    Some(l) => f < theta || (f == theta && bland && basis.cells[k] < basis.cells[l]),
                };
                if better {
                    theta = f;
                    leave = Some(k);
                }
            }
        }
        let leave = leave.expect("cycle has a losing cell");
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[k] -= theta;
            } else {
                basis.flow[k] += theta;
            }
        }
        basis.cells[leave] = (p, q);
        basis.flow[leave] = theta;
        if theta > T::zero() {
            streak = 0;
        } else {
            streak += 1;
        }
    }

    let mut flow = Matrix::zeros(m, n);
    for (&(i, j), &f) in basis.cells.iter().zip(&basis.flow) {
        flow[(i, j)] += f.max(T::zero());
    }
    let cost_value = flow.as_slice().iter().zip(cost.as_slice()).map(|(&x, &c)| x * c).sum();
    Ok(TransportPlan { flow, cost: cost_value, pivots })
}
