//! Uniform time grid shared by controls and integrators.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    steps: usize,
}

/// A time together with the control cell that governs it.
///
/// At a grid node `k >= 1` the cell is `k - 1` (the cell ending there); at `t = 0` it is cell 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instant<T> {
    pub t: T,
    pub cell: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.horizon / T::count(self.steps)
    }

    pub fn time(&self, node: usize) -> T {
        if node == self.steps {
            self.horizon
        } else {
            T::count(node) * self.dt()
        }
    }

    pub fn times(&self) -> Vec<T> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Node index if `t` sits on the grid (relative tolerance 1e-9).
    pub fn node_of(&self, t: T) -> Option<usize> {
        let s = t / self.dt();
        let k = s.round();
        let slack = T::lit(1e-9) * k.abs().max(T::one());
        if (s - k).abs() <= slack && k >= T::zero() && k <= T::count(self.steps) {
            k.to_usize()
        } else {
            None
        }
    }

    /// Cell governing time `t`; boundary times belong to the cell on their left.
    pub fn cell_at(&self, t: T) -> Result<usize> {
        let slack = T::lit(1e-9) * self.horizon.max(T::one());
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::TimeOutOfRange(t.as_f64()));
        }
        if let Some(k) = self.node_of(t) {
            return Ok(k.saturating_sub(1));
        }
        let c = (t / self.dt()).floor().to_usize().unwrap_or(0);
        Ok(c.min(self.steps - 1))
    }

    /// Instant at node `k` read with the left-cell convention.
    pub fn node_instant(&self, node: usize) -> Instant<T> {
        Instant { t: self.time(node), cell: node.saturating_sub(1).min(self.steps - 1) }
    }

    /// Instant at `t` inside `cell`.
    pub fn in_cell(&self, cell: usize, t: T) -> Instant<T> {
        Instant { t, cell }
    }

    pub fn instant(&self, t: T) -> Result<Instant<T>> {
        Ok(Instant { t, cell: self.cell_at(t)? })
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node > self.steps {
            Err(Error::NodeOutOfRange { node, steps: self.steps })
        } else {
            Ok(())
        }
    }
}
