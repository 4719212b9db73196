use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::DiscreteMeasure;

/// Transport plan between two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T> {
    source: DiscreteMeasure<T>,
    target: DiscreteMeasure<T>,
    joint: Matrix<T>,
}

fn marginal_tolerance<T: Real>(n: usize) -> T {
    T::lit(1e-10).max(T::epsilon() * T::count(8 * n.max(1)))
}

impl<T: Real> Coupling<T> {
    pub fn new(source: DiscreteMeasure<T>, target: DiscreteMeasure<T>, joint: Matrix<T>) -> Result<Self> {
        if joint.rows() != source.len() || joint.cols() != target.len() {
            return Err(Error::InvalidCoupling(format!(
                "joint is {}x{}, marginals have {} and {} atoms",
                joint.rows(),
                joint.cols(),
                source.len(),
                target.len()
            )));
        }
        if joint.as_slice().iter().any(|&g| !(g >= T::zero())) {
            return Err(Error::InvalidCoupling("joint entries must be nonnegative".into()));
        }
        let tol = marginal_tolerance::<T>(source.len() + target.len());
        for i in 0..source.len() {
            let row: T = joint.row(i).iter().copied().sum();
            if (row - source.weight(i)).abs() > tol {
                return Err(Error::InvalidCoupling(format!("row {i} sums to {row}, source weight {}", source.weight(i))));
            }
        }
        for j in 0..target.len() {
            let col: T = (0..source.len()).map(|i| joint[(i, j)]).sum();
            if (col - target.weight(j)).abs() > tol {
                return Err(Error::InvalidCoupling(format!("column {j} sums to {col}, target weight {}", target.weight(j))));
            }
        }
        Ok(Self { source, target, joint })
    }

    /// Product plan `mu ⊗ nu`.
    pub fn independent(source: DiscreteMeasure<T>, target: DiscreteMeasure<T>) -> Self {
        let joint = Matrix::outer(source.weights(), target.weights());
        Self { source, target, joint }
    }

    pub fn source(&self) -> &DiscreteMeasure<T> {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure<T> {
        &self.target
    }

    pub fn joint(&self) -> &Matrix<T> {
        &self.joint
    }

    /// `sum_ij gamma_ij c_ij`.
    pub fn cost(&self, cost: &Matrix<T>) -> T {
        self.joint.as_slice().iter().zip(cost.as_slice()).map(|(&g, &c)| g * c).sum()
    }

    /// Conditional law of the target given source atom `i`. `None` when that atom has no mass.
    pub fn disintegration(&self, i: usize) -> Option<DiscreteMeasure<T>> {
        let row = self.joint.row(i);
        let total: T = row.iter().copied().sum();
        if !(total > T::zero()) {
            return None;
        }
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for (j, &g) in row.iter().enumerate() {
            if g > T::zero() {
                pts.extend_from_slice(self.target.point(j));
                ws.push(g);
            }
        }
        DiscreteMeasure::normalized(self.target.dim(), pts, ws).ok()
    }

    /// Conditional mean of the target given source atom `i`.
    pub fn barycenter(&self, i: usize) -> Option<Vec<T>> {
        self.disintegration(i).map(|m| m.mean())
    }

    /// The plan viewed as a measure on the product space, atoms `(x_i, y_j)` with positive mass.
    pub fn as_product_measure(&self) -> Result<DiscreteMeasure<T>> {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for i in 0..self.source.len() {
            for j in 0..self.target.len() {
                let g = self.joint[(i, j)];
                if g > T::zero() {
                    pts.extend_from_slice(self.source.point(i));
                    pts.extend_from_slice(self.target.point(j));
                    ws.push(g);
                }
            }
        }
        DiscreteMeasure::normalized(self.source.dim() + self.target.dim(), pts, ws)
    }
}
