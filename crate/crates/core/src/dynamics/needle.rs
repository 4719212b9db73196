use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{ControlField, ControlLaw, InteractionKernel};
use crate::linalg::dist;
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;
use crate::time::TimeGrid;

use super::forward::{solve_forward, TrajectorySolution};
use super::linearized::solve_needle_linearization;

/// Needle `omega` on the cells `[node - cells, node)`, i.e. on `[tau - e, tau]` with `e = cells * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeedleEntry<T> {
    pub field: ControlField<T>,
    pub node: usize,
    pub cells: usize,
}

impl<T: Real> NeedleEntry<T> {
    /// Entry with length `e`, which must be a whole number of cells.
    pub fn from_length(field: ControlField<T>, node: usize, e: T, grid: &TimeGrid<T>) -> Result<Self> {
        let c = e / grid.dt();
        let k = c.round();
        if !(e >= T::zero()) || (c - k).abs() > T::lit(1e-9) * k.max(T::one()) {
            return Err(Error::InvalidNeedle(format!("length {e} is not a multiple of dt = {}", grid.dt())));
        }
        Ok(Self { field, node, cells: k.to_usize().unwrap_or(0) })
    }

    pub fn length(&self, grid: &TimeGrid<T>) -> T {
        T::count(self.cells) * grid.dt()
    }

    fn first_cell(&self) -> usize {
        self.node - self.cells
    }
}

/// Needles with distinct base nodes and pairwise disjoint cell ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct NeedlePackage<T> {
    entries: Vec<NeedleEntry<T>>,
}

impl<T: Real> NeedlePackage<T> {
    pub fn new(mut entries: Vec<NeedleEntry<T>>, grid: &TimeGrid<T>) -> Result<Self> {
        for e in &entries {
            if e.node > grid.steps() {
                return Err(Error::InvalidNeedle(format!("node {} beyond the last node {}", e.node, grid.steps())));
            }
            if e.cells > e.node {
                return Err(Error::InvalidNeedle(format!("needle at node {} with {} cells starts before 0", e.node, e.cells)));
            }
        }
        entries.sort_by_key(|e| e.node);
        for (a, first) in entries.iter().enumerate() {
            for second in &entries[a + 1..] {
                if first.node == second.node {
                    return Err(Error::InvalidNeedle(format!("two needles share node {}", first.node)));
                }
                if first.cells > 0 && second.cells > 0 && second.first_cell() < first.node {
                    return Err(Error::InvalidNeedle(format!(
                        "needles at nodes {} and {} overlap",
                        first.node, second.node
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[NeedleEntry<T>] {
        &self.entries
    }

    /// Lengths `e_k`.
    pub fn lengths(&self, grid: &TimeGrid<T>) -> Vec<T> {
        self.entries.iter().map(|e| e.length(grid)).collect()
    }

    /// Same package with every needle `factor` times shorter.
    pub fn shrunk(&self, factor: usize, grid: &TimeGrid<T>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                if e.cells % factor != 0 {
                    return Err(Error::InvalidNeedle(format!("{} cells cannot be divided by {factor}", e.cells)));
                }
                Ok(NeedleEntry { field: e.field.clone(), node: e.node, cells: e.cells / factor })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, grid)
    }

    /// True when `node` lies strictly inside some needle interval.
    pub fn covers(&self, node: usize) -> bool {
        self.entries.iter().any(|e| e.cells > 0 && node > e.first_cell() && node < e.node)
    }
}

/// Control equal to `omega_k` on each needle interval and to `law` elsewhere.
pub fn apply_needle<T: Real>(law: &ControlLaw<T>, pkg: &NeedlePackage<T>) -> Result<ControlLaw<T>> {
    let mut out = law.clone();
    for e in &pkg.entries {
        if e.node > law.cells() {
            return Err(Error::InvalidNeedle(format!("node {} beyond the horizon", e.node)));
        }
        for cell in e.first_cell()..e.node {
            out = out.with_cell(cell, &e.field)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstOrderLevel {
    pub lengths: Vec<f64>,
    pub norm: f64,
    pub residual: f64,
    /// `residual / norm`; zero when all lengths vanish.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstOrderReport {
    pub levels: Vec<FirstOrderLevel>,
    /// `ratio` is nonincreasing across levels.
    pub monotone: bool,
}

/// Compares perturbed trajectories against `X + sum_k e_k F_k` for the package and its halvings.
///
/// `levels` packages are used: `pkg`, then each needle halved, and so on. Nodes strictly inside a
/// needle interval are left out of the residual.
pub fn verify_first_order<T: Real>(
    mu0: &DiscreteMeasure<T>,
    traj: &TrajectorySolution<T>,
    kernel: &dyn InteractionKernel<T>,
    law: &ControlLaw<T>,
    pkg: &NeedlePackage<T>,
    levels: usize,
) -> Result<FirstOrderReport> {
    let grid = *traj.grid();
    let d = traj.dim();
    let first_order = pkg
        .entries
        .iter()
        .map(|e| solve_needle_linearization(traj, kernel, law, &e.field, e.node))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let p = pkg.shrunk(1 << level, &grid)?;
        let lengths = p.lengths(&grid);
        let e_norm = lengths.iter().fold(T::zero(), |s, &e| s + e * e).sqrt();
        let perturbed = solve_forward(mu0, kernel, &apply_needle(law, &p)?, &grid)?;
        let mut residual = T::zero();
        for node in 0..=grid.steps() {
            if p.covers(node) {
                continue;
            }
            for i in 0..traj.atoms() {
                let mut predicted = traj.position(node, i).to_vec();
                for ((entry, f), &e) in p.entries.iter().zip(&first_order).zip(&lengths) {
                    if node >= entry.node {
                        for (a, &b) in predicted.iter_mut().zip(f[node - entry.node].at(i)) {
                            *a += e * b;
                        }
                    }
                }
                residual = residual.max(dist(&predicted, perturbed.position(node, i)));
            }
        }
        debug_assert_eq!(d, traj.dim());
        let ratio = if e_norm > T::zero() { residual / e_norm } else { T::zero() };
        out.push(FirstOrderLevel {
            lengths: lengths.iter().map(|e| e.as_f64()).collect(),
            norm: e_norm.as_f64(),
            residual: residual.as_f64(),
            ratio: ratio.as_f64(),
        });
    }
    let monotone = out.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    Ok(FirstOrderReport { levels: out, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::constant_basis;
    use std::sync::Arc;

    fn setup() -> (TimeGrid<f64>, ControlLaw<f64>, ControlField<f64>) {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let basis = constant_basis(1);
        let law = ControlLaw::constant_in_time(1, Arc::clone(&basis), grid, vec![0.0], 1.0).unwrap();
        let omega = ControlField::new(1, basis, vec![1.0]).unwrap();
        (grid, law, omega)
    }

    #[test]
    fn lengths_must_be_whole_cells() {
        let (grid, _, omega) = setup();
        assert!(NeedleEntry::from_length(omega.clone(), 5, 0.2, &grid).is_ok());
        assert!(NeedleEntry::from_length(omega, 5, 0.15, &grid).is_err());
    }

    #[test]
    fn overlapping_needles_are_rejected() {
        let (grid, _, omega) = setup();
        let a = NeedleEntry { field: omega.clone(), node: 5, cells: 2 };
        let b = NeedleEntry { field: omega.clone(), node: 6, cells: 2 };
        assert!(NeedlePackage::new(vec![a.clone(), b], &grid).is_err());
        let c = NeedleEntry { field: omega, node: 7, cells: 2 };
        assert!(NeedlePackage::new(vec![a, c], &grid).is_ok());
    }

    #[test]
    fn splicing() {
        let (grid, law, omega) = setup();
        let empty = NeedlePackage::new(vec![NeedleEntry { field: omega.clone(), node: 4, cells: 0 }], &grid).unwrap();
        assert_eq!(apply_needle(&law, &empty).unwrap(), law);
        let full = NeedlePackage::new(vec![NeedleEntry { field: omega.clone(), node: 10, cells: 10 }], &grid).unwrap();
        let spliced = apply_needle(&law, &full).unwrap();
        assert!((0..10).all(|c| spliced.cell_coeffs(c) == [1.0]));
        let two = ControlField::new(1, Arc::clone(law.basis()), vec![2.0]).unwrap();
        let pkg = NeedlePackage::new(
            vec![NeedleEntry { field: omega, node: 3, cells: 1 }, NeedleEntry { field: two, node: 8, cells: 2 }],
            &grid,
        )
        .unwrap();
        let s = apply_needle(&law, &pkg).unwrap();
        let got: Vec<f64> = (0..10).map(|c| s.cell_coeffs(c)[0]).collect();
        assert_eq!(got, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 2.0, 0.0, 0.0]);
    }
}
