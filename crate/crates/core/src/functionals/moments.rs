use crate::error::{check_dim, Result};
use crate::linalg::{Matrix, AtomField};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

/// Moment map `m: R^d -> R^k`; its integral `∫ m dmu` feeds the integrands.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentMap<T> {
    /// `m = 0` in `R^k`.
    Zero { k: usize },
    /// `m(x) = x`.
    Identity,
    /// `m(x) = |x|^2`.
    SquaredNorm,
    /// `m(x) = A x + b`.
    Affine { a: Matrix<T>, b: Vec<T> },
}

impl<T: Real> MomentMap<T> {
    pub fn len(&self, dim: usize) -> usize {
        match self {
            MomentMap::Zero { k } => *k,
            MomentMap::Identity => dim,
            MomentMap::SquaredNorm => 1,
            MomentMap::Affine { b, .. } => b.len(),
        }
    }

    pub fn is_empty(&self, dim: usize) -> bool {
        self.len(dim) == 0
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if let MomentMap::Affine { a, b } = self {
            check_dim(b.len(), a.rows())?;
            check_dim(dim, a.cols())?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        match self {
            MomentMap::Zero { k } => vec![T::zero(); *k],
            MomentMap::Identity => x.to_vec(),
            MomentMap::SquaredNorm => vec![x.iter().fold(T::zero(), |s, &v| s + v * v)],
            MomentMap::Affine { a, b } => a.mul_vec(x).into_iter().zip(b).map(|(v, &c)| v + c).collect(),
        }
    }

    /// `Dm(x)`, a `k x d` matrix.
    pub fn jacobian(&self, x: &[T]) -> Matrix<T> {
        let d = x.len();
        match self {
            MomentMap::Zero { k } => Matrix::zeros(*k, d),
            MomentMap::Identity => Matrix::identity(d),
            MomentMap::SquaredNorm => Matrix::from_row_major(1, d, x.iter().map(|&v| T::lit(2.0) * v).collect()),
            MomentMap::Affine { a, .. } => a.clone(),
        }
    }

    /// `sum_a c_a ∇²m_a(x)`.
    pub fn weighted_hessian(&self, coeffs: &[T], dim: usize) -> Matrix<T> {
        match self {
            MomentMap::SquaredNorm => Matrix::identity(dim).scaled(T::lit(2.0) * coeffs[0]),
            _ => Matrix::zeros(dim, dim),
        }
    }

    /// `∫ m dmu`.
    pub fn integrate(&self, mu: &DiscreteMeasure<T>) -> Vec<T> {
        mu.integrate_vec(self.len(mu.dim()), |x| self.eval(x))
    }

    /// `x_i -> Dm(x_i)^T c`, sampled at the atoms.
    pub(crate) fn pull_back(&self, mu: &DiscreteMeasure<T>, c: &[T]) -> AtomField<T> {
        AtomField::from_fn(mu.dim(), mu.len(), |i| self.jacobian(mu.point(i)).tr_mul_vec(c))
    }
}
