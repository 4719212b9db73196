use crate::error::{check_dim, Error, Result};
use crate::fields::{ControlField, ControlLaw, InteractionKernel};
use crate::linalg::{AtomField, Matrix};
use crate::scalar::Real;

use super::forward::{point_jacobian, rk4, TrajectorySolution};

fn ensure_finite<T: Real>(v: &[T], step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Jacobians `D_x(v + u)` at every atom of a stage cloud.
fn atom_jacobians<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    cell: usize,
    t: T,
    cloud: &[T],
    weights: &[T],
    dim: usize,
) -> Vec<Matrix<T>> {
    cloud.chunks_exact(dim).map(|x| point_jacobian(kernel, law, cell, t, cloud, weights, x)).collect()
}

/// `sum_j w_j Γ(t, y_i, y_j) g_j` for every atom `i`.
fn gamma_sum<T: Real>(kernel: &dyn InteractionKernel<T>, t: T, cloud: &[T], weights: &[T], g: &[T], dim: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cloud.len()];
    if kernel.is_decoupled() {
        return out;
    }
    for (i, yi) in cloud.chunks_exact(dim).enumerate() {
        let acc = &mut out[i * dim..(i + 1) * dim];
        for (j, yj) in cloud.chunks_exact(dim).enumerate() {
            let contrib = kernel.jac_y(t, yi, yj).mul_vec(&g[j * dim..(j + 1) * dim]);
            for (a, c) in acc.iter_mut().zip(contrib) {
                *a += weights[j] * c;
            }
        }
    }
    out
}

/// Tangent of the frozen flow: `w' = D_x(v + u)(t, Φ_{(s,t)}(x)) w`, `w(s) = h`.
/// Returns `w` at nodes `s..=N`.
pub fn solve_linearized_classical<T: Real>(
    traj: &TrajectorySolution<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    s: usize,
    x: &[T],
    h: &[T],
) -> Result<Vec<Vec<T>>> {
    let d = traj.dim();
    check_dim(d, x.len())?;
    check_dim(d, h.len())?;
    traj.grid().check_node(s)?;
    let w = traj.weights();
    let mut state: Vec<T> = x.iter().chain(h).copied().collect();
    let mut path = vec![h.to_vec()];
    for k in s..traj.grid().steps() {
        state = rk4(&state, traj.grid().dt(), traj.forward_stages(k), |t, cloud, st| {
            let (y, z) = st.split_at(d);
            let mut out = super::forward::point_velocity(kernel, law, k, t, cloud, w, y);
            out.extend(point_jacobian(kernel, law, k, t, cloud, w, y).mul_vec(z));
            out
        });
        ensure_finite(&state, k + 1)?;
        path.push(state[d..].to_vec());
    }
    Ok(path)
}

/// Per-atom solution of the measure-perturbed linearization started at node `s`.
#[derive(Debug, Clone)]
pub struct NonlocalLinearization<T> {
    pub start: usize,
    /// `D_xΦ V` along each atom, one field per node from `start`.
    pub classical: Vec<AtomField<T>>,
    /// The non-local correction `w`, one field per node from `start`.
    pub nonlocal: Vec<AtomField<T>>,
}

impl<T: Real> NonlocalLinearization<T> {
    /// Total first-order displacement `D_xΦ V + w` of the atoms at `node`.
    pub fn total(&self, node: usize) -> AtomField<T> {
        let mut f = self.classical[node - self.start].clone();
        f.add_scaled(T::one(), &self.nonlocal[node - self.start]);
        f
    }
}

/// Solves `w' = D_x(v + u) w + ∫ Γ (D_xΦ V + w) dmu`, `w(s) = 0`, jointly with `z = D_xΦ V`.
pub fn solve_linearized_nonlocal<T: Real>(
    traj: &TrajectorySolution<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    s: usize,
    v: &AtomField<T>,
) -> Result<NonlocalLinearization<T>> {
    let d = traj.dim();
    let n = traj.atoms();
    check_dim(d, v.dim())?;
    check_dim(n, v.len())?;
    traj.grid().check_node(s)?;
    let w = traj.weights();
    let nd = n * d;
    let mut state: Vec<T> = v.as_slice().iter().copied().chain(std::iter::repeat(T::zero()).take(nd)).collect();
    let mut classical = vec![v.clone()];
    let mut nonlocal = vec![AtomField::zeros(d, n)];
    for k in s..traj.grid().steps() {
        state = rk4(&state, traj.grid().dt(), traj.forward_stages(k), |t, cloud, st| {
            let (z, ww) = st.split_at(nd);
            let jac = atom_jacobians(kernel, law, k, t, cloud, w, d);
            let total: Vec<T> = z.iter().zip(ww).map(|(&a, &b)| a + b).collect();
            let coupling = gamma_sum(kernel, t, cloud, w, &total, d);
            let mut out = Vec::with_capacity(2 * nd);
            for (i, j) in jac.iter().enumerate() {
                out.extend(j.mul_vec(&z[i * d..(i + 1) * d]));
            }
            for (i, j) in jac.iter().enumerate() {
                let jw = j.mul_vec(&ww[i * d..(i + 1) * d]);
                out.extend(jw.into_iter().zip(&coupling[i * d..(i + 1) * d]).map(|(a, &b)| a + b));
            }
            out
        });
        ensure_finite(&state, k + 1)?;
        classical.push(AtomField::from_flat(d, state[..nd].to_vec()));
        nonlocal.push(AtomField::from_flat(d, state[nd..].to_vec()));
    }
    Ok(NonlocalLinearization { start: s, classical, nonlocal })
}

/// First-order effect of a needle `(omega, tau)`: `F' = D_x(u + v) F + ∫ Γ F dmu` with
/// `F(tau) = omega - u(tau^-)` at the atoms. Returns one field per node `tau..=N`.
pub fn solve_needle_linearization<T: Real>(
    traj: &TrajectorySolution<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    omega: &ControlField<T>,
    tau: usize,
) -> Result<Vec<AtomField<T>>> {
    let d = traj.dim();
    check_dim(d, omega.dim())?;
    traj.grid().check_node(tau)?;
    let w = traj.weights();
    let cell = tau.saturating_sub(1).min(traj.grid().steps() - 1);
    let start = AtomField::from_fn(d, traj.atoms(), |i| {
        let x = traj.position(tau, i);
        omega.eval(x).into_iter().zip(law.eval_in_cell(cell, x)).map(|(a, b)| a - b).collect()
    });
    let mut state = start.as_slice().to_vec();
    let mut path = vec![start];
    for k in tau..traj.grid().steps() {
        state = rk4(&state, traj.grid().dt(), traj.forward_stages(k), |t, cloud, f| {
            let jac = atom_jacobians(kernel, law, k, t, cloud, w, d);
            let mut out = gamma_sum(kernel, t, cloud, w, f, d);
            for (i, j) in jac.iter().enumerate() {
                for (a, b) in out[i * d..(i + 1) * d].iter_mut().zip(j.mul_vec(&f[i * d..(i + 1) * d])) {
                    *a += b;
                }
            }
            out
        });
        ensure_finite(&state, k + 1)?;
        path.push(AtomField::from_flat(d, state.clone()));
    }
    Ok(path)
}
