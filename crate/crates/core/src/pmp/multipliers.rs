use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::time::TimeGrid;

/// Multipliers `(lambda_0, lambda_I, eta_E, varpi)`. Each `varpi_l` is a list of `(time, mass)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSet<T> {
    pub lambda0: T,
    pub inequality: Vec<T>,
    pub equality: Vec<T>,
    pub state: Vec<Vec<(T, T)>>,
}

impl<T: Real> MultiplierSet<T> {
    /// Normal multipliers with nothing attached to constraints.
    pub fn normal(inequalities: usize, equalities: usize, state: usize) -> Self {
        Self {
            lambda0: T::one(),
            inequality: vec![T::zero(); inequalities],
            equality: vec![T::zero(); equalities],
            state: vec![Vec::new(); state],
        }
    }

    pub fn check_arity(&self, inequalities: usize, equalities: usize, state: usize) -> Result<()> {
        let mismatch = |what: &str, have: usize, want: usize| {
            Err(Error::ArityMismatch(format!("{have} {what} multipliers for {want} constraints")))
        };
        if self.inequality.len() != inequalities {
            return mismatch("inequality", self.inequality.len(), inequalities);
        }
        if self.equality.len() != equalities {
            return mismatch("equality", self.equality.len(), equalities);
        }
        if self.state.len() != state {
            return mismatch("state constraint", self.state.len(), state);
        }
        Ok(())
    }

    /// Problems with the sign and range requirements on the multipliers.
    pub fn domain_issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lambda0 != T::zero() && self.lambda0 != T::one() {
            out.push(format!("lambda_0 = {} is neither 0 nor 1", self.lambda0));
        }
        for (i, &l) in self.inequality.iter().enumerate() {
            if !(l >= T::zero()) {
                out.push(format!("inequality multiplier {i} = {l} is negative"));
            }
        }
        for (l, atoms) in self.state.iter().enumerate() {
            for &(t, m) in atoms {
                if !(m >= T::zero()) {
                    out.push(format!("state multiplier {l} has negative mass {m} at t = {t}"));
                }
            }
        }
        out
    }

    /// True unless every multiplier vanishes.
    pub fn is_nondegenerate(&self) -> bool {
        self.lambda0 != T::zero()
            || self.inequality.iter().chain(&self.equality).any(|&v| v != T::zero())
            || self.state.iter().flatten().any(|&(_, m)| m != T::zero())
    }
}

/// Tail masses of a multiplier measure carried by grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaPath<T> {
    /// Mass sitting on each node `0..=N`.
    masses: Vec<T>,
}

impl<T: Real> ZetaPath<T> {
    pub fn zero(grid: &TimeGrid<T>) -> Self {
        Self { masses: vec![T::zero(); grid.steps() + 1] }
    }

    pub fn from_node_masses(masses: Vec<T>) -> Self {
        Self { masses }
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    fn last(&self) -> usize {
        self.masses.len() - 1
    }

    fn tail(&self, from: usize) -> T {
        self.masses[from.min(self.masses.len())..].iter().copied().sum()
    }

    /// `zeta(t_k) = varpi([t_k, T])` for `k < N`, and `0` at `T`.
    pub fn at_node(&self, k: usize) -> T {
        if k >= self.last() {
            T::zero()
        } else {
            self.tail(k)
        }
    }

    /// `zeta(t_k+) = varpi((t_k, T])`, and `0` at `T`.
    pub fn right_limit(&self, k: usize) -> T {
        if k >= self.last() {
            T::zero()
        } else {
            self.tail(k + 1)
        }
    }

    /// Value on the open cell `(t_c, t_{c+1})`.
    pub fn on_cell(&self, c: usize) -> T {
        self.tail(c + 1)
    }

    /// Value read at node `k` from the cell on its left.
    pub fn left_cell_value(&self, k: usize) -> T {
        self.on_cell(k.max(1) - 1)
    }

    pub fn mass_at(&self, k: usize) -> T {
        self.masses[k]
    }
}

/// `zeta(t) = varpi([t, T])` on the grid nodes, from atoms that must sit on nodes.
pub fn zeta_from_measure<T: Real>(atoms: &[(T, T)], grid: &TimeGrid<T>) -> Result<ZetaPath<T>> {
    let mut masses = vec![T::zero(); grid.steps() + 1];
    for &(t, m) in atoms {
        let k = grid.node_of(t).ok_or(Error::OffGridAtom(t.as_f64()))?;
        masses[k] += m;
    }
    Ok(ZetaPath { masses })
}

/// Atoms approximating the density `f` on the grid: node `k` carries `dt (f(t_k) + f(t_{k+1})) / 2`.
pub fn lumped_density<T: Real, F: Fn(T) -> T>(f: F, grid: &TimeGrid<T>) -> Vec<(T, T)> {
    let half = grid.dt() * T::lit(0.5);
    (0..grid.steps()).map(|k| (grid.time(k), half * (f(grid.time(k)) + f(grid.time(k + 1))))).collect()
}
