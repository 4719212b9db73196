use crate::dynamics::{solve_needle_linearization, TrajectorySolution};
use crate::error::{check_dim, Error, Result};
use crate::fields::{cloud_velocity, ControlField, ControlLaw};
use crate::linalg::{axpy, dot, AtomField};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;
use crate::time::Instant;

use super::costate::{solve_costate_backward, zeta_paths, StateCostatePath};
use super::multipliers::{MultiplierSet, ZetaPath};
use super::penalization::penalized_constraint;
use super::problem::ControlProblem;

/// `H = ∫ <r, v[mu] + omega(x)> dnu - lambda_0 L(t, mu, omega) - C(t, mu, zeta, omega)`.
pub fn hamiltonian<T: Real>(
    problem: &ControlProblem<T>,
    at: Instant<T>,
    mu: &DiscreteMeasure<T>,
    costate: &AtomField<T>,
    zeta: &[T],
    lambda0: T,
    omega: &ControlField<T>,
) -> Result<T> {
    check_dim(mu.len(), costate.len())?;
    check_dim(mu.dim(), costate.dim())?;
    let kernel = problem.kernel.as_ref();
    let mut h = T::zero();
    for (i, (x, &w)) in mu.points().zip(mu.weights()).enumerate() {
        let mut s = cloud_velocity(kernel, mu.flat_points(), mu.weights(), at.t, x);
        axpy(&mut s, T::one(), &omega.eval(x));
        h += w * dot(costate.at(i), &s);
    }
    if lambda0 != T::zero() {
        h -= lambda0 * problem.running.value(at, mu, omega)?;
    }
    Ok(h - penalized_constraint(kernel, &problem.state, zeta, at.t, mu, omega)?)
}

/// A candidate extremal: trajectory, costates and multipliers for one control law.
#[derive(Clone)]
pub struct Extremal<'a, T> {
    pub problem: &'a ControlProblem<T>,
    pub law: &'a ControlLaw<T>,
    pub trajectory: TrajectorySolution<T>,
    pub costate: StateCostatePath<T>,
    pub multipliers: MultiplierSet<T>,
    zeta: Vec<ZetaPath<T>>,
}

/// `K(t_n)` for `n = tau..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPath<T> {
    pub tau: usize,
    pub values: Vec<T>,
}

impl<T: Real> KPath<T> {
    pub fn at(&self, node: usize) -> Option<T> {
        node.checked_sub(self.tau).and_then(|i| self.values.get(i).copied())
    }

    pub fn terminal(&self) -> T {
        *self.values.last().expect("K path is never empty")
    }

    /// `max_n K(t_n) - min_n K(t_n)`.
    pub fn spread(&self) -> T {
        let hi = self.values.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = self.values.iter().copied().fold(T::infinity(), T::min);
        hi - lo
    }
}

impl<'a, T: Real> Extremal<'a, T> {
    /// Simulates the law and integrates the costates for the given multipliers.
    pub fn solve(
        problem: &'a ControlProblem<T>,
        mu0: &DiscreteMeasure<T>,
        law: &'a ControlLaw<T>,
        multipliers: MultiplierSet<T>,
    ) -> Result<Self> {
        let trajectory = problem.simulate(mu0, law)?;
        let costate = solve_costate_backward(problem, &trajectory, law, &multipliers)?;
        Self::from_parts(problem, law, trajectory, costate, multipliers)
    }

    pub fn from_parts(
        problem: &'a ControlProblem<T>,
        law: &'a ControlLaw<T>,
        trajectory: TrajectorySolution<T>,
        costate: StateCostatePath<T>,
        multipliers: MultiplierSet<T>,
    ) -> Result<Self> {
        problem.check_multipliers(&multipliers)?;
        if costate.grid() != trajectory.grid() || law.grid() != trajectory.grid() {
            return Err(Error::InvalidParameter("trajectory, costates and control use different grids".into()));
        }
        check_dim(trajectory.atoms(), costate.atoms())?;
        let zeta = zeta_paths(&multipliers, trajectory.grid())?;
        Ok(Self { problem, law, trajectory, costate, multipliers, zeta })
    }

    pub fn zeta(&self) -> &[ZetaPath<T>] {
        &self.zeta
    }

    /// `zeta` read at node `k` from the cell on its left.
    pub fn zeta_left(&self, k: usize) -> Vec<T> {
        self.zeta.iter().map(|z| z.left_cell_value(k)).collect()
    }

    /// `zeta(t_k+)`.
    pub fn zeta_right(&self, k: usize) -> Vec<T> {
        self.zeta.iter().map(|z| z.right_limit(k)).collect()
    }

    /// Hamiltonian at node `k` with the left-cell instant and `zeta`.
    pub fn hamiltonian_at_node(&self, k: usize, omega: &ControlField<T>) -> Result<T> {
        self.hamiltonian_with(k, &self.zeta_left(k), omega)
    }

    pub fn hamiltonian_with(&self, k: usize, zeta: &[T], omega: &ControlField<T>) -> Result<T> {
        let grid = self.trajectory.grid();
        grid.check_node(k)?;
        hamiltonian(
            self.problem,
            grid.node_instant(k),
            &self.trajectory.cloud(k),
            &self.costate.costate_field(k),
            zeta,
            self.multipliers.lambda0,
            omega,
        )
    }

    /// The optimal control's field on the cell left of node `k`.
    pub fn control_at_node(&self, k: usize) -> ControlField<T> {
        self.law.field(self.trajectory.grid().node_instant(k).cell)
    }

    /// `X_l(t_n) = ∫ <∇_mu Lambda_l(t_n, mu(t_n)), F> dmu(t_n)`.
    fn constraint_pairings(&self, node: usize, f: &AtomField<T>) -> Result<Vec<T>> {
        let grid = self.trajectory.grid();
        let mu = self.trajectory.cloud(node);
        self.problem
            .state
            .iter()
            .map(|c| {
                let p = c.prepare(grid.time(node), &mu)?;
                Ok(p.grad(&mu).pairing(mu.weights(), f))
            })
            .collect()
    }

    /// Values of the needle function `K` on the nodes `tau..=N` for the needle `omega` at `tau`:
    ///
    /// `K(t) = ∫<r, F> - lambda_0 (L(tau, omega) - L(tau, u)) - ∫_tau^t lambda_0 ∫<∇L, F> ds
    ///         - sum_l ∫_[tau,t] X_l dvarpi_l - sum_l zeta_l(t+) X_l(t)`.
    pub fn k_path(&self, omega: &ControlField<T>, tau: usize) -> Result<KPath<T>> {
        let traj = &self.trajectory;
        let grid = traj.grid();
        grid.check_node(tau)?;
        let lambda0 = self.multipliers.lambda0;
        let kernel = self.problem.kernel.as_ref();
        let f = solve_needle_linearization(traj, kernel, self.law, omega, tau)?;
        let w = traj.weights();

        let start = grid.node_instant(tau);
        let mu_tau = traj.cloud(tau);
        let jump = if lambda0 == T::zero() {
            T::zero()
        } else {
            let running = &self.problem.running;
            lambda0 * (running.value(start, &mu_tau, omega)? - running.value(start, &mu_tau, &self.law.field(start.cell))?)
        };

        let running_pairing = |node: usize, cell: usize, f: &AtomField<T>| -> Result<T> {
            if lambda0 == T::zero() {
                return Ok(T::zero());
            }
            let g = self.problem.running.gradient(grid.in_cell(cell, grid.time(node)), &traj.cloud(node), &self.law.field(cell))?;
            Ok(lambda0 * g.pairing(w, f))
        };

        let half = grid.dt() * T::lit(0.5);
        let mut values = Vec::with_capacity(f.len());
        let mut integral = T::zero();
        let mut atoms = T::zero();
        for (offset, fk) in f.iter().enumerate() {
            let n = tau + offset;
            if n > tau {
                let c = n - 1;
                integral += half * (running_pairing(c, c, &f[offset - 1])? + running_pairing(n, c, fk)?);
            }
            let x = self.constraint_pairings(n, fk)?;
            let mut tail = T::zero();
            for (l, z) in self.zeta.iter().enumerate() {
                atoms += z.mass_at(n) * x[l];
                tail += z.right_limit(n) * x[l];
            }
            let transport = self.costate.costate_field(n).pairing(w, fk);
            values.push(transport - jump - integral - atoms - tail);
        }
        Ok(KPath { tau, values })
    }

    /// `K(t)` at node `node >= tau`.
    pub fn k_function(&self, omega: &ControlField<T>, tau: usize, node: usize) -> Result<T> {
        if node < tau {
            return Err(Error::InvalidParameter(format!("K is defined from tau = {tau} on, not at node {node}")));
        }
        self.trajectory.grid().check_node(node)?;
        Ok(self.k_path(omega, tau)?.at(node).expect("node lies in the path"))
    }

    /// `X_l(tau)` for the needle `omega` at `tau`, i.e. `∫ <∇Lambda_l, omega - u(tau-)> dmu(tau)`.
    pub fn needle_constraint_pairings(&self, omega: &ControlField<T>, tau: usize) -> Result<Vec<T>> {
        let grid = self.trajectory.grid();
        grid.check_node(tau)?;
        let cell = grid.node_instant(tau).cell;
        let mu = self.trajectory.cloud(tau);
        let f = AtomField::from_fn(mu.dim(), mu.len(), |i| {
            let x = mu.point(i);
            omega.eval(x).into_iter().zip(self.law.eval_in_cell(cell, x)).map(|(a, b)| a - b).collect()
        });
        self.constraint_pairings(tau, &f)
    }
}
