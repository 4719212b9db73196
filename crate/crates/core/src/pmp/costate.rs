use std::io::Write;

use crate::dynamics::{point_jacobian, rk4, TrajectorySolution};
use crate::error::{check_dim, Error, Result};
use crate::fields::ControlLaw;
use crate::linalg::{axpy, AtomField};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;
use crate::time::TimeGrid;

use super::multipliers::{zeta_from_measure, MultiplierSet, ZetaPath};
use super::penalization::grad_penalized_constraint;
use super::problem::ControlProblem;

/// Atoms `(x_i, r_i)` with weights `w_i` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCostatePath<T> {
    grid: TimeGrid<T>,
    dim: usize,
    weights: Vec<T>,
    positions: Vec<Vec<T>>,
    costates: Vec<Vec<T>>,
}

impl<T: Real> StateCostatePath<T> {
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

    pub fn positions(&self, node: usize) -> &[T] {
        &self.positions[node]
    }

    pub fn costates(&self, node: usize) -> &[T] {
        &self.costates[node]
    }

    pub fn costate(&self, node: usize, atom: usize) -> &[T] {
        &self.costates[node][atom * self.dim..(atom + 1) * self.dim]
    }

    pub fn costate_field(&self, node: usize) -> AtomField<T> {
        AtomField::from_flat(self.dim, self.costates[node].clone())
    }

    /// First marginal at node `k`.
    pub fn cloud(&self, node: usize) -> DiscreteMeasure<T> {
        DiscreteMeasure::from_parts_unchecked(self.dim, self.positions[node].clone(), self.weights.clone())
    }

    /// Same path with every costate negated.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.costates.iter_mut().flatten().for_each(|r| *r = -*r);
        out
    }

    /// Writes `t,atom_id,w,x1..xd,r1..rd` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim;
        write!(out, "t,atom_id,w")?;
        for k in 1..=d {
            write!(out, ",x{k}")?;
        }
        for k in 1..=d {
            write!(out, ",r{k}")?;
        }
        writeln!(out)?;
        for (node, (pts, rs)) in self.positions.iter().zip(&self.costates).enumerate() {
            let t = self.grid.time(node);
            for (i, w) in self.weights.iter().enumerate() {
                write!(out, "{t},{i},{w}")?;
                for c in pts[i * d..(i + 1) * d].iter().chain(&rs[i * d..(i + 1) * d]) {
                    write!(out, ",{c}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn zeta_paths<T: Real>(m: &MultiplierSet<T>, grid: &TimeGrid<T>) -> Result<Vec<ZetaPath<T>>> {
    m.state.iter().map(|atoms| zeta_from_measure(atoms, grid)).collect()
}

/// Integrates the costates backwards from `r_i(T) = -∇S(x_i(T))`:
///
/// `r_i' = lambda_0 ∇L + ∇C - D_x(u + v)^T r_i - sum_j w_j Γ_{x_j}(x_i)^T r_j`,
///
/// with RK4 per cell along the stored forward trajectory, so the positions are reused exactly.
pub fn solve_costate_backward<T: Real>(
    problem: &ControlProblem<T>,
    traj: &TrajectorySolution<T>,
    law: &ControlLaw<T>,
    m: &MultiplierSet<T>,
) -> Result<StateCostatePath<T>> {
    problem.check_multipliers(m)?;
    check_dim(problem.dim(), traj.dim())?;
    if law.grid() != traj.grid() {
        return Err(Error::InvalidParameter("control cells must match the trajectory grid".into()));
    }
    let grid = *traj.grid();
    let d = traj.dim();
    let n = traj.atoms();
    let w = traj.weights();
    let kernel = problem.kernel.as_ref();
    let zetas = zeta_paths(m, &grid)?;
    let steps = grid.steps();

    let mut costates = vec![Vec::new(); steps + 1];
    let mut r = problem.final_gradient(&traj.cloud(steps), m)?.into_vec();
    r.iter_mut().for_each(|v| *v = -*v);
    costates[steps] = r.clone();

    let mut failure = None;
    for k in (0..steps).rev() {
        let field = law.field(k);
        let zeta: Vec<T> = zetas.iter().map(|z| z.on_cell(k)).collect();
        let mid = traj.hermite_mid(k);
        let times = traj.backward_times(k);
        let stages = [
            (times[0], traj.positions(k + 1)),
            (times[1], &mid[..]),
            (times[2], &mid[..]),
            (times[3], traj.positions(k)),
        ];
        r = rk4(&r, -grid.dt(), stages, |t, cloud, r| {
            let mu = DiscreteMeasure::from_parts_unchecked(d, cloud.to_vec(), w.to_vec());
            let mut g = match forcing(problem, m.lambda0, &zeta, grid.in_cell(k, t), &mu, &field) {
                Ok(g) => g.into_vec(),
                Err(e) => {
                    failure.get_or_insert(e);
                    return vec![T::zero(); n * d];
                }
            };
            for i in 0..n {
                let xi = &cloud[i * d..(i + 1) * d];
                let jac = point_jacobian(kernel, law, k, t, cloud, w, xi);
                let mut acc = jac.tr_mul_vec(&r[i * d..(i + 1) * d]);
                if !kernel.is_decoupled() {
                    for j in 0..n {
                        let xj = &cloud[j * d..(j + 1) * d];
                        axpy(&mut acc, w[j], &kernel.jac_y(t, xj, xi).tr_mul_vec(&r[j * d..(j + 1) * d]));
                    }
                }
                axpy(&mut g[i * d..(i + 1) * d], -T::one(), &acc);
            }
            g
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        costates[k] = r.clone();
    }
    Ok(StateCostatePath {
        grid,
        dim: d,
        weights: w.to_vec(),
        positions: (0..=steps).map(|k| traj.positions(k).to_vec()).collect(),
        costates,
    })
}

fn forcing<T: Real>(
    problem: &ControlProblem<T>,
    lambda0: T,
    zeta: &[T],
    at: crate::time::Instant<T>,
    mu: &DiscreteMeasure<T>,
    field: &crate::fields::ControlField<T>,
) -> Result<AtomField<T>> {
    let mut g = grad_penalized_constraint(problem.kernel.as_ref(), &problem.state, zeta, at.t, mu, field)?;
    if lambda0 != T::zero() {
        g.add_scaled(lambda0, &problem.running.gradient(at, mu, field)?);
    }
    Ok(g)
}
