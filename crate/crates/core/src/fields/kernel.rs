use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Result};
use crate::linalg::{norm, Matrix};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

/// Declared regularity constants of a kernel on measures supported in a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBounds<T> {
    /// `|v[mu](t,x)| <= m * (1 + |x|)`.
    pub m: T,
    /// Lipschitz constant of `x -> v[mu](t,x)`.
    pub l1: T,
    /// Lipschitz constant of `mu -> v[mu](t,x)` in `W1`.
    pub l2: T,
}

/// Interaction kernel `H(t,x,y)`; the velocity is `v[mu](t,x) = ∫ H(t,x,y) dmu(y)`.
pub trait InteractionKernel<T: Real>: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, t: T, x: &[T], y: &[T]) -> Vec<T>;

    /// `D_x H`. Defaults to central differences.
    fn jac_x(&self, t: T, x: &[T], y: &[T]) -> Matrix<T> {
        central_jacobian(x, |xp| self.eval(t, xp, y))
    }

    /// `D_y H`. Defaults to central differences.
    fn jac_y(&self, t: T, x: &[T], y: &[T]) -> Matrix<T> {
        central_jacobian(y, |yp| self.eval(t, x, yp))
    }

    /// Declared constants for measures supported in the ball of the given radius.
    fn bounds(&self, radius: T) -> KernelBounds<T>;

    /// True when jac_y vanishes identically, so the measure coupling can be skipped.
    fn is_decoupled(&self) -> bool {
        false
    }
}

pub(crate) fn central_jacobian<T: Real, F: Fn(&[T]) -> Vec<T>>(at: &[T], f: F) -> Matrix<T> {
    let d = at.len();
    let base = T::epsilon().cbrt();
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(d);
    let mut p = at.to_vec();
    for k in 0..d {
        let h = base * at[k].abs().max(T::one());
        p[k] = at[k] + h;
        let fp = f(&p);
        p[k] = at[k] - h;
        let fm = f(&p);
        p[k] = at[k];
        cols.push(fp.iter().zip(&fm).map(|(&a, &b)| (a - b) / (h + h)).collect());
    }
    let rows = cols.first().map_or(0, Vec::len);
    let mut j = Matrix::zeros(rows, d);
    for (k, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            j[(i, k)] = v;
        }
    }
    j
}

/// `H = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroKernel {
    pub dim: usize,
}

impl<T: Real> InteractionKernel<T> for ZeroKernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: T, _x: &[T], _y: &[T]) -> Vec<T> {
        vec![T::zero(); self.dim]
    }
    fn jac_x(&self, _t: T, _x: &[T], _y: &[T]) -> Matrix<T> {
        Matrix::zeros(self.dim, self.dim)
    }
    fn jac_y(&self, _t: T, _x: &[T], _y: &[T]) -> Matrix<T> {
        Matrix::zeros(self.dim, self.dim)
    }
    fn bounds(&self, _radius: T) -> KernelBounds<T> {
        KernelBounds { m: T::zero(), l1: T::zero(), l2: T::zero() }
    }
    fn is_decoupled(&self) -> bool {
        true
    }
}

/// `H = kappa (y - x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearAttraction<T> {
    pub dim: usize,
    pub kappa: T,
}

impl<T: Real> InteractionKernel<T> for LinearAttraction<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: T, x: &[T], y: &[T]) -> Vec<T> {
        x.iter().zip(y).map(|(&a, &b)| self.kappa * (b - a)).collect()
    }
    fn jac_x(&self, _t: T, _x: &[T], _y: &[T]) -> Matrix<T> {
        Matrix::identity(self.dim).scaled(-self.kappa)
    }
    fn jac_y(&self, _t: T, _x: &[T], _y: &[T]) -> Matrix<T> {
        Matrix::identity(self.dim).scaled(self.kappa)
    }
    fn bounds(&self, radius: T) -> KernelBounds<T> {
        let k = self.kappa.abs();
        KernelBounds { m: k * (T::one() + radius), l1: k, l2: k }
    }
}

/// `H = kappa (y - x) / (1 + |y - x|^2)^beta`, `beta` in [1/2, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuckerSmale<T> {
    pub dim: usize,
    pub kappa: T,
    pub beta: T,
}

impl<T: Real> CuckerSmale<T> {
    fn profile(&self, z: &[T]) -> (T, T) {
        let s = z.iter().fold(T::zero(), |a, &v| a + v * v);
        let base = T::one() + s;
        let g = base.powf(-self.beta);
        let dg = -self.beta * T::lit(2.0) * g / base;
        (g, dg)
    }

    /// `D_z [kappa z g(|z|^2)] = kappa (g I + 2 g' z z^T)` with `g' = dg/ds` folded in.
    fn jac_z(&self, z: &[T]) -> Matrix<T> {
        let (g, dg) = self.profile(z);
        let mut j = Matrix::outer(z, z).scaled(dg);
        for k in 0..self.dim {
            j[(k, k)] += g;
        }
        j.scaled(self.kappa)
    }
}

impl<T: Real> InteractionKernel<T> for CuckerSmale<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _t: T, x: &[T], y: &[T]) -> Vec<T> {
        let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| b - a).collect();
        let (g, _) = self.profile(&z);
        z.into_iter().map(|v| self.kappa * g * v).collect()
    }
    fn jac_x(&self, _t: T, x: &[T], y: &[T]) -> Matrix<T> {
        let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| b - a).collect();
        self.jac_z(&z).scaled(-T::one())
    }
    fn jac_y(&self, _t: T, x: &[T], y: &[T]) -> Matrix<T> {
        let z: Vec<T> = x.iter().zip(y).map(|(&a, &b)| b - a).collect();
        self.jac_z(&z)
    }
    fn bounds(&self, _radius: T) -> KernelBounds<T> {
        let k = self.kappa.abs();
        KernelBounds { m: k, l1: k, l2: k }
    }
}

pub type KernelFn<T> = Arc<dyn Fn(T, &[T], &[T]) -> Vec<T> + Send + Sync>;
pub type KernelJacFn<T> = Arc<dyn Fn(T, &[T], &[T]) -> Matrix<T> + Send + Sync>;

/// User kernel from closures. Missing Jacobians fall back to central differences.
#[derive(Clone)]
pub struct FnKernel<T> {
    pub dim: usize,
    pub eval: KernelFn<T>,
    pub jac_x: Option<KernelJacFn<T>>,
    pub jac_y: Option<KernelJacFn<T>>,
    pub bounds: KernelBounds<T>,
}

impl<T> fmt::Debug for FnKernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel")
            .field("dim", &self.dim)
            .field("jac_x", &self.jac_x.is_some())
            .field("jac_y", &self.jac_y.is_some())
            .finish()
    }
}

impl<T: Real> InteractionKernel<T> for FnKernel<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: T, x: &[T], y: &[T]) -> Vec<T> {
        (self.eval)(t, x, y)
    }
    fn jac_x(&self, t: T, x: &[T], y: &[T]) -> Matrix<T> {
        match &self.jac_x {
            Some(j) => j(t, x, y),
            None => central_jacobian(x, |xp| (self.eval)(t, xp, y)),
        }
    }
    fn jac_y(&self, t: T, x: &[T], y: &[T]) -> Matrix<T> {
        match &self.jac_y {
            Some(j) => j(t, x, y),
            None => central_jacobian(y, |yp| (self.eval)(t, x, yp)),
        }
    }
    fn bounds(&self, _radius: T) -> KernelBounds<T> {
        self.bounds
    }
}

pub(crate) fn cloud_velocity<T: Real, K: InteractionKernel<T> + ?Sized>(
    kernel: &K,
    points: &[T],
    weights: &[T],
    t: T,
    x: &[T],
) -> Vec<T> {
    let d = x.len();
    let mut v = vec![T::zero(); d];
    if kernel.is_decoupled() {
        return v;
    }
    for (y, &w) in points.chunks_exact(d).zip(weights) {
        for (a, h) in v.iter_mut().zip(kernel.eval(t, x, y)) {
            *a += w * h;
        }
    }
    v
}

pub(crate) fn cloud_velocity_jacobian<T: Real, K: InteractionKernel<T> + ?Sized>(
    kernel: &K,
    points: &[T],
    weights: &[T],
    t: T,
    x: &[T],
) -> Matrix<T> {
    let d = x.len();
    let mut j = Matrix::zeros(d, d);
    if kernel.is_decoupled() {
        return j;
    }
    for (y, &w) in points.chunks_exact(d).zip(weights) {
        j.add_scaled(w, &kernel.jac_x(t, x, y));
    }
    j
}

/// `v[mu](t,x) = sum_i w_i H(t, x, y_i)`.
pub fn eval_velocity<T: Real, K: InteractionKernel<T> + ?Sized>(
    kernel: &K,
    mu: &DiscreteMeasure<T>,
    t: T,
    x: &[T],
) -> Result<Vec<T>> {
    check_dim(kernel.dim(), mu.dim())?;
    check_dim(mu.dim(), x.len())?;
    Ok(cloud_velocity(kernel, mu.flat_points(), mu.weights(), t, x))
}

/// `D_x v[mu](t,x) = sum_i w_i D_x H(t, x, y_i)`.
pub fn eval_velocity_jacobian<T: Real, K: InteractionKernel<T> + ?Sized>(
    kernel: &K,
    mu: &DiscreteMeasure<T>,
    t: T,
    x: &[T],
) -> Result<Matrix<T>> {
    check_dim(kernel.dim(), mu.dim())?;
    check_dim(mu.dim(), x.len())?;
    Ok(cloud_velocity_jacobian(kernel, mu.flat_points(), mu.weights(), t, x))
}

/// Measure derivative of the velocity at `x` in direction of the atom `y`: `D_y H(t,x,y)`.
pub fn eval_gamma<T: Real, K: InteractionKernel<T> + ?Sized>(kernel: &K, t: T, x: &[T], y: &[T]) -> Result<Matrix<T>> {
    check_dim(kernel.dim(), x.len())?;
    check_dim(kernel.dim(), y.len())?;
    Ok(kernel.jac_y(t, x, y))
}

pub(crate) fn sublinear_ratio<T: Real>(h: &[T], x: &[T]) -> T {
    norm(h) / (T::one() + norm(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_examples() {
        let k = LinearAttraction { dim: 1, kappa: 1.0 };
        let mu = DiscreteMeasure::uniform(1, vec![0.0, 2.0]).unwrap();
        assert_eq!(eval_velocity(&k, &mu, 0.0, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(eval_velocity(&ZeroKernel { dim: 1 }, &mu, 0.0, &[0.0]).unwrap(), vec![0.0]);
        let cs = CuckerSmale { dim: 1, kappa: 1.0, beta: 1.0 };
        let d1 = DiscreteMeasure::dirac(&[1.0]);
        assert!((eval_velocity(&cs, &d1, 0.0, &[0.0]).unwrap()[0] - 0.5f64).abs() < 1e-15);
    }

    #[test]
    fn jacobian_and_gamma_examples() {
        let k = LinearAttraction { dim: 2, kappa: 1.0 };
        let mu = DiscreteMeasure::dirac(&[1.0, 2.0]);
        assert_eq!(eval_velocity_jacobian(&k, &mu, 0.0, &[0.0, 0.0]).unwrap(), Matrix::identity(2).scaled(-1.0));
        assert_eq!(eval_gamma(&k, 0.0, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), Matrix::identity(2));
        let cs = CuckerSmale { dim: 1, kappa: 1.0, beta: 1.0 };
        let d1 = DiscreteMeasure::dirac(&[1.0f64]);
        assert!(eval_velocity_jacobian(&cs, &d1, 0.0, &[0.0]).unwrap()[(0, 0)].abs() < 1e-15);
        assert!(eval_gamma(&cs, 0.0, &[0.0], &[1.0]).unwrap()[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let cs = CuckerSmale { dim: 2, kappa: 0.7, beta: 0.75 };
        let (x, y) = ([0.3, -1.2], [1.1, 0.4]);
        let jx = cs.jac_x(0.0, &x, &y);
        let fd = central_jacobian(&x, |xp| cs.eval(0.0, xp, &y));
        assert!(jx.max_abs_diff(&fd) < 1e-9);
    }
}
