use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::fields::{cloud_velocity, cloud_velocity_jacobian, ControlLaw, InteractionKernel};
use crate::linalg::{norm, Matrix};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;
use crate::time::TimeGrid;

/// Stage data of one RK4 step, kept so that auxiliary equations see exactly the same mean field.
#[derive(Debug, Clone)]
pub(crate) struct StepStages<T> {
    pub x2: Vec<T>,
    pub x3: Vec<T>,
    pub x4: Vec<T>,
    /// Velocity at the step's start.
    pub k1: Vec<T>,
    /// Velocity at the step's end, evaluated with the step's own control cell.
    pub v_end: Vec<T>,
}

/// Particle trajectory on the grid nodes with fixed weights.
#[derive(Debug, Clone)]
pub struct TrajectorySolution<T> {
    grid: TimeGrid<T>,
    dim: usize,
    weights: Vec<T>,
    nodes: Vec<Vec<T>>,
    stages: Vec<StepStages<T>>,
    radius_bound: T,
}

#[inline]
pub(crate) fn lin<T: Real>(y: &[T], s: T, k: &[T]) -> Vec<T> {
    y.iter().zip(k).map(|(&a, &b)| a + s * b).collect()
}

#[inline]
fn combine<T: Real>(y: &[T], h: T, k1: &[T], k2: &[T], k3: &[T], k4: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    let h6 = h / T::lit(6.0);
    (0..y.len()).map(|i| y[i] + h6 * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect()
}

/// One classical RK4 step of `y' = f(t, cloud, y)` with the four stage times and clouds given.
pub(crate) fn rk4<T, F>(y: &[T], h: T, stages: [(T, &[T]); 4], mut f: F) -> Vec<T>
where
    T: Real,
    F: FnMut(T, &[T], &[T]) -> Vec<T>,
{
    let half = h * T::lit(0.5);
    let k1 = f(stages[0].0, stages[0].1, y);
    let k2 = f(stages[1].0, stages[1].1, &lin(y, half, &k1));
    let k3 = f(stages[2].0, stages[2].1, &lin(y, half, &k2));
    let k4 = f(stages[3].0, stages[3].1, &lin(y, h, &k3));
    combine(y, h, &k1, &k2, &k3, &k4)
}

/// `v[cloud](t, x) + u_cell(x)`.
pub(crate) fn point_velocity<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    cell: usize,
    t: T,
    cloud: &[T],
    weights: &[T],
    x: &[T],
) -> Vec<T> {
    let mut v = cloud_velocity(kernel, cloud, weights, t, x);
    for (a, b) in v.iter_mut().zip(law.eval_in_cell(cell, x)) {
        *a += b;
    }
    v
}

/// `D_x v[cloud](t, x) + D_x u_cell(x)`.
pub(crate) fn point_jacobian<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    cell: usize,
    t: T,
    cloud: &[T],
    weights: &[T],
    x: &[T],
) -> Matrix<T> {
    let mut j = cloud_velocity_jacobian(kernel, cloud, weights, t, x);
    j.add_assign(&law.jacobian_in_cell(cell, x));
    j
}

fn cloud_field<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    cell: usize,
    t: T,
    cloud: &[T],
    weights: &[T],
    dim: usize,
) -> Vec<T> {
    cloud.chunks_exact(dim).flat_map(|x| point_velocity(kernel, law, cell, t, cloud, weights, x)).collect()
}

/// Integrates the particle system `x_i' = v[mu_N](t, x_i) + u(t, x_i)` with fixed-step RK4,
/// re-evaluating the mean field at every stage.
pub fn solve_forward<T: Real>(
    mu0: &DiscreteMeasure<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    grid: &TimeGrid<T>,
) -> Result<TrajectorySolution<T>> {
    let dim = mu0.dim();
    check_dim(kernel.dim(), dim)?;
    check_dim(law.dim(), dim)?;
    if law.grid() != grid {
        return Err(Error::InvalidParameter("control cells must match the integration grid".into()));
    }
    let w = mu0.weights();
    let dt = grid.dt();
    let half = dt * T::lit(0.5);
    let mut nodes = Vec::with_capacity(grid.steps() + 1);
    let mut stages = Vec::with_capacity(grid.steps());
    nodes.push(mu0.flat_points().to_vec());
    for k in 0..grid.steps() {
        let (t0, t1) = (grid.time(k), grid.time(k + 1));
        let tm = t0 + half;
        let x1 = &nodes[k];
        let k1 = cloud_field(kernel, law, k, t0, x1, w, dim);
        let x2 = lin(x1, half, &k1);
        let k2 = cloud_field(kernel, law, k, tm, &x2, w, dim);
        let x3 = lin(x1, half, &k2);
        let k3 = cloud_field(kernel, law, k, tm, &x3, w, dim);
        let x4 = lin(x1, dt, &k3);
        let k4 = cloud_field(kernel, law, k, t1, &x4, w, dim);
        let next = combine(x1, dt, &k1, &k2, &k3, &k4);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k + 1 });
        }
        let v_end = cloud_field(kernel, law, k, t1, &next, w, dim);
        stages.push(StepStages { x2, x3, x4, k1, v_end });
        nodes.push(next);
    }

    let observed = nodes.iter().flat_map(|n| n.chunks_exact(dim).map(norm)).fold(T::zero(), T::max);
    let r0 = mu0.support_radius();
    let rate = kernel.bounds(observed).m + law.sublinear_constant();
    let radius_bound = (T::one() + r0) * (rate * grid.horizon()).exp() - T::one();
    Ok(TrajectorySolution { grid: *grid, dim, weights: w.to_vec(), nodes, stages, radius_bound })
}

impl<T: Real> TrajectorySolution<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Row-major positions at a node. Atom `i` keeps its index at every node.
    pub fn positions(&self, node: usize) -> &[T] {
        &self.nodes[node]
    }

    pub fn position(&self, node: usize, atom: usize) -> &[T] {
        &self.nodes[node][atom * self.dim..(atom + 1) * self.dim]
    }

    pub fn cloud(&self, node: usize) -> DiscreteMeasure<T> {
        DiscreteMeasure::from_parts_unchecked(self.dim, self.nodes[node].clone(), self.weights.clone())
    }

    pub fn clouds(&self) -> Vec<DiscreteMeasure<T>> {
        (0..self.nodes.len()).map(|k| self.cloud(k)).collect()
    }

    /// Grönwall bound `(1 + R_0) exp((M + L_U) T) - 1` on the support radius, with `M` taken
    /// for the observed support and `L_U` the control's sublinear constant.
    pub fn radius_bound(&self) -> T {
        self.radius_bound
    }

    /// Stage times and clouds of step `k`, forward in time.
    pub(crate) fn forward_stages(&self, k: usize) -> [(T, &[T]); 4] {
        let s = &self.stages[k];
        let t0 = self.grid.time(k);
        let tm = t0 + self.grid.dt() * T::lit(0.5);
        [(t0, &self.nodes[k][..]), (tm, &s.x2[..]), (tm, &s.x3[..]), (self.grid.time(k + 1), &s.x4[..])]
    }

    /// Cubic Hermite midpoint of step `k` from end positions and end velocities.
    pub(crate) fn hermite_mid(&self, k: usize) -> Vec<T> {
        let s = &self.stages[k];
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        let c = self.grid.dt() / T::lit(8.0);
        let half = T::lit(0.5);
        (0..a.len()).map(|i| half * (a[i] + b[i]) + c * (s.k1[i] - s.v_end[i])).collect()
    }

    /// Stage times for the backward step `t_{k+1} -> t_k` (clouds: end, midpoint, midpoint, start).
    pub(crate) fn backward_times(&self, k: usize) -> [T; 4] {
        let t0 = self.grid.time(k);
        let tm = t0 + self.grid.dt() * T::lit(0.5);
        [self.grid.time(k + 1), tm, tm, t0]
    }

    /// Writes `t,atom_id,w,x1..xd` rows, node by node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t,atom_id,w")?;
        for k in 1..=self.dim {
            write!(out, ",x{k}")?;
        }
        writeln!(out)?;
        for (node, pts) in self.nodes.iter().enumerate() {
            let t = self.grid.time(node);
            for (i, (x, w)) in pts.chunks_exact(self.dim).zip(&self.weights).enumerate() {
                write!(out, "{t},{i},{w}")?;
                for c in x {
                    write!(out, ",{c}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Transports the point `x` from node `s` to node `t` through the trajectory's frozen mean field.
/// Backward transport (`t < s`) uses Hermite midpoints of the stored positions.
pub fn flow_map<T: Real>(
    traj: &TrajectorySolution<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    s: usize,
    t: usize,
    x: &[T],
) -> Result<Vec<T>> {
    check_dim(traj.dim, x.len())?;
    traj.grid.check_node(s)?;
    traj.grid.check_node(t)?;
    if norm(x) > T::lit(2.0) * traj.radius_bound.max(T::one()) {
        log::warn!("flow_map: start point far outside the support bound {}", traj.radius_bound);
    }
    let w = &traj.weights[..];
    let mut y = x.to_vec();
    if t >= s {
        for k in s..t {
            y = rk4(&y, traj.grid.dt(), traj.forward_stages(k), |tt, cloud, p| {
                point_velocity(kernel, law, k, tt, cloud, w, p)
            });
        }
    } else {
        for k in (t..s).rev() {
            let mid = traj.hermite_mid(k);
            let ts = traj.backward_times(k);
            let stages = [(ts[0], &traj.nodes[k + 1][..]), (ts[1], &mid[..]), (ts[2], &mid[..]), (ts[3], &traj.nodes[k][..])];
            y = rk4(&y, -traj.grid.dt(), stages, |tt, cloud, p| point_velocity(kernel, law, k, tt, cloud, w, p));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: t });
    }
    Ok(y)
}
