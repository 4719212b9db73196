use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::time::TimeGrid;

/// A C¹ basis vector field `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisField<T> {
    /// `X(x) = c`.
    Constant(Vec<T>),
    /// `X(x) = A x + b`.
    Linear { a: Matrix<T>, b: Vec<T> },
    /// `X(x) = tanh(A x + b)` componentwise.
    Tanh { a: Matrix<T>, b: Vec<T> },
}

impl<T: Real> BasisField<T> {
    pub fn dim(&self) -> usize {
        match self {
            BasisField::Constant(c) => c.len(),
            BasisField::Linear { b, .. } | BasisField::Tanh { b, .. } => b.len(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        check_dim(dim, self.dim())?;
        if let BasisField::Linear { a, .. } | BasisField::Tanh { a, .. } = self {
            check_dim(dim, a.rows())?;
            check_dim(dim, a.cols())?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        match self {
            BasisField::Constant(c) => c.clone(),
            BasisField::Linear { a, b } => a.mul_vec(x).into_iter().zip(b).map(|(v, &o)| v + o).collect(),
            BasisField::Tanh { a, b } => a.mul_vec(x).into_iter().zip(b).map(|(v, &o)| (v + o).tanh()).collect(),
        }
    }

    pub fn jacobian(&self, x: &[T]) -> Matrix<T> {
        match self {
            BasisField::Constant(c) => Matrix::zeros(c.len(), c.len()),
            BasisField::Linear { a, .. } => a.clone(),
            BasisField::Tanh { a, b } => {
                let z = a.mul_vec(x);
                let mut j = a.clone();
                for (i, (&zi, &bi)) in z.iter().zip(b).enumerate() {
                    let th = (zi + bi).tanh();
                    let s = T::one() - th * th;
                    for k in 0..j.cols() {
                        j[(i, k)] *= s;
                    }
                }
                j
            }
        }
    }
}

fn combine<T: Real>(basis: &[BasisField<T>], coeffs: &[T], dim: usize, x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); dim];
    for (f, &c) in basis.iter().zip(coeffs) {
        if c != T::zero() {
            for (o, v) in out.iter_mut().zip(f.eval(x)) {
                *o += c * v;
            }
        }
    }
    out
}

fn combine_jacobian<T: Real>(basis: &[BasisField<T>], coeffs: &[T], dim: usize, x: &[T]) -> Matrix<T> {
    let mut out = Matrix::zeros(dim, dim);
    for (f, &c) in basis.iter().zip(coeffs) {
        if c != T::zero() {
            out.add_scaled(c, &f.jacobian(x));
        }
    }
    out
}

/// Time-frozen control field `omega(x) = sum_k c_k X_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField<T> {
    dim: usize,
    basis: Arc<Vec<BasisField<T>>>,
    coeffs: Vec<T>,
}

impl<T: Real> ControlField<T> {
    pub fn new(dim: usize, basis: Arc<Vec<BasisField<T>>>, coeffs: Vec<T>) -> Result<Self> {
        for f in basis.iter() {
            f.validate(dim)?;
        }
        check_dim(basis.len(), coeffs.len())?;
        Ok(Self { dim, basis, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Arc<Vec<BasisField<T>>> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        combine(&self.basis, &self.coeffs, self.dim, x)
    }

    pub fn jacobian(&self, x: &[T]) -> Matrix<T> {
        combine_jacobian(&self.basis, &self.coeffs, self.dim, x)
    }
}

/// Piecewise-constant-in-time control `u(t,x) = sum_k c_k(t) X_k(x)` on the cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw<T> {
    dim: usize,
    basis: Arc<Vec<BasisField<T>>>,
    grid: TimeGrid<T>,
    /// Row-major, one row of `basis.len()` coefficients per cell.
    coeffs: Vec<T>,
    bound: T,
}

impl<T: Real> ControlLaw<T> {
    pub fn new(
        dim: usize,
        basis: Arc<Vec<BasisField<T>>>,
        grid: TimeGrid<T>,
        coeffs: Vec<Vec<T>>,
        bound: T,
    ) -> Result<Self> {
        for f in basis.iter() {
            f.validate(dim)?;
        }
        check_dim(grid.steps(), coeffs.len())?;
        for row in &coeffs {
            check_dim(basis.len(), row.len())?;
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("control coefficients must be finite".into()));
        }
        Ok(Self { dim, basis, grid, coeffs: coeffs.concat(), bound })
    }

    /// Same coefficients on every cell.
    pub fn constant_in_time(
        dim: usize,
        basis: Arc<Vec<BasisField<T>>>,
        grid: TimeGrid<T>,
        coeffs: Vec<T>,
        bound: T,
    ) -> Result<Self> {
        let rows = vec![coeffs; grid.steps()];
        Self::new(dim, basis, grid, rows, bound)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<Vec<BasisField<T>>> {
        &self.basis
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn cells(&self) -> usize {
        self.grid.steps()
    }

    pub fn cell_coeffs(&self, cell: usize) -> &[T] {
        let m = self.basis.len();
        &self.coeffs[cell * m..(cell + 1) * m]
    }

    /// The control frozen on one cell.
    pub fn field(&self, cell: usize) -> ControlField<T> {
        ControlField { dim: self.dim, basis: Arc::clone(&self.basis), coeffs: self.cell_coeffs(cell).to_vec() }
    }

    pub fn eval_in_cell(&self, cell: usize, x: &[T]) -> Vec<T> {
        combine(&self.basis, self.cell_coeffs(cell), self.dim, x)
    }

    pub fn jacobian_in_cell(&self, cell: usize, x: &[T]) -> Matrix<T> {
        combine_jacobian(&self.basis, self.cell_coeffs(cell), self.dim, x)
    }

    /// `u(t,x)`. On a cell boundary the left cell is used.
    pub fn eval(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim, x.len())?;
        Ok(self.eval_in_cell(self.grid.cell_at(t)?, x))
    }

    /// `D_x u(t,x)`. On a cell boundary the left cell is used.
    pub fn jacobian(&self, t: T, x: &[T]) -> Result<Matrix<T>> {
        check_dim(self.dim, x.len())?;
        Ok(self.jacobian_in_cell(self.grid.cell_at(t)?, x))
    }

    /// `s` such that `|u(t,x)| <= s (1 + |x|)` for all cells.
    pub fn sublinear_constant(&self) -> T {
        let per_field: Vec<T> = self
            .basis
            .iter()
            .map(|f| match f {
                BasisField::Constant(c) => crate::linalg::norm(c),
                BasisField::Linear { a, b } => a.spectral_norm().max(crate::linalg::norm(b)),
                BasisField::Tanh { b, .. } => T::count(b.len()).sqrt(),
            })
            .collect();
        (0..self.cells())
            .map(|c| self.cell_coeffs(c).iter().zip(&per_field).map(|(&k, &s)| k.abs() * s).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Replaces the coefficients on one cell by those of `field`.
    pub fn with_cell(&self, cell: usize, field: &ControlField<T>) -> Result<Self> {
        if !Arc::ptr_eq(&field.basis, &self.basis) && *field.basis != *self.basis {
            return Err(Error::InvalidParameter("control field uses a different basis than the law".into()));
        }
        if cell >= self.cells() {
            return Err(Error::NodeOutOfRange { node: cell, steps: self.cells() });
        }
        let mut out = self.clone();
        let m = self.basis.len();
        out.coeffs[cell * m..(cell + 1) * m].copy_from_slice(&field.coeffs);
        Ok(out)
    }

    /// Coefficientwise sum of two laws on the same basis and grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if *self.basis != *other.basis || self.grid != other.grid {
            return Err(Error::InvalidParameter("laws differ in basis or grid".into()));
        }
        let mut out = self.clone();
        for (a, &b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }
}

/// Convenience for the common single constant direction basis.
pub fn constant_basis<T: Real>(dim: usize) -> Arc<Vec<BasisField<T>>> {
    Arc::new(
        (0..dim)
            .map(|k| {
                let mut e = vec![T::zero(); dim];
                e[k] = T::one();
                BasisField::Constant(e)
            })
            .collect(),
    )
}
