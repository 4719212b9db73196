use std::fmt;
use std::sync::Arc;

use crate::dynamics::{solve_forward, TrajectorySolution};
use crate::error::{check_dim, Result};
use crate::fields::{ControlLaw, InteractionKernel};
use crate::functionals::{RunningCost, StateConstraint, TerminalFunctional};
use crate::linalg::AtomField;
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

use super::multipliers::MultiplierSet;

/// Dynamics, costs and constraints of one optimal control problem.
#[derive(Clone)]
pub struct ControlProblem<T> {
    pub kernel: Arc<dyn InteractionKernel<T>>,
    pub running: RunningCost<T>,
    pub terminal: TerminalFunctional<T>,
    /// End-point constraints `Psi(mu(T)) <= 0`.
    pub inequality: Vec<TerminalFunctional<T>>,
    /// End-point constraints `Psi(mu(T)) = 0`.
    pub equality: Vec<TerminalFunctional<T>>,
    /// Path constraints `Lambda(t, mu(t)) <= 0`.
    pub state: Vec<StateConstraint<T>>,
}

impl<T: Real> fmt::Debug for ControlProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("kernel", &self.kernel)
            .field("running", &self.running)
            .field("terminal", &self.terminal)
            .field("inequality", &self.inequality.len())
            .field("equality", &self.equality.len())
            .field("state", &self.state.len())
            .finish()
    }
}

impl<T: Real> ControlProblem<T> {
    pub fn new(kernel: Arc<dyn InteractionKernel<T>>, running: RunningCost<T>, terminal: TerminalFunctional<T>) -> Self {
        Self { kernel, running, terminal, inequality: Vec::new(), equality: Vec::new(), state: Vec::new() }
    }

    pub fn with_inequality(mut self, psi: TerminalFunctional<T>) -> Self {
        self.inequality.push(psi);
        self
    }

    pub fn with_equality(mut self, psi: TerminalFunctional<T>) -> Self {
        self.equality.push(psi);
        self
    }

    pub fn with_state_constraint(mut self, lambda: StateConstraint<T>) -> Self {
        self.state.push(lambda);
        self
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn check_multipliers(&self, m: &MultiplierSet<T>) -> Result<()> {
        m.check_arity(self.inequality.len(), self.equality.len(), self.state.len())
    }

    pub fn simulate(&self, mu0: &DiscreteMeasure<T>, law: &ControlLaw<T>) -> Result<TrajectorySolution<T>> {
        self.running.validate(mu0.dim(), Some(law.cells()))?;
        solve_forward(mu0, self.kernel.as_ref(), law, law.grid())
    }

    /// `∫ L dt + phi(mu(T))`, with the trapezoid rule on each control cell.
    pub fn cost(&self, traj: &TrajectorySolution<T>, law: &ControlLaw<T>) -> Result<T> {
        let grid = traj.grid();
        let half = grid.dt() * T::lit(0.5);
        let mut total = T::zero();
        for c in 0..grid.steps() {
            let field = law.field(c);
            let a = self.running.value(grid.in_cell(c, grid.time(c)), &traj.cloud(c), &field)?;
            let b = self.running.value(grid.in_cell(c, grid.time(c + 1)), &traj.cloud(c + 1), &field)?;
            total += half * (a + b);
        }
        Ok(total + self.terminal.value(&traj.cloud(grid.steps()))?)
    }

    /// `∇S = lambda_0 ∇phi + sum lambda_i ∇Psi_I + sum eta_j ∇Psi_E` at the atoms of `mu`.
    pub fn final_gradient(&self, mu: &DiscreteMeasure<T>, m: &MultiplierSet<T>) -> Result<AtomField<T>> {
        self.check_multipliers(m)?;
        check_dim(self.dim(), mu.dim())?;
        let mut g = AtomField::zeros(mu.dim(), mu.len());
        let terms = std::iter::once((m.lambda0, &self.terminal))
            .chain(m.inequality.iter().copied().zip(&self.inequality))
            .chain(m.equality.iter().copied().zip(&self.equality));
        for (c, f) in terms {
            if c != T::zero() {
                g.add_scaled(c, &f.gradient(mu)?);
            }
        }
        Ok(g)
    }

    /// `Lambda_l(t_k, mu(t_k))` for every constraint and node.
    pub fn state_constraint_values(&self, traj: &TrajectorySolution<T>) -> Result<Vec<Vec<T>>> {
        let grid = traj.grid();
        self.state
            .iter()
            .map(|c| (0..=grid.steps()).map(|k| Ok(c.prepare(grid.time(k), &traj.cloud(k))?.value())).collect())
            .collect()
    }
}
