use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Result};
use crate::linalg::{axpy, dot, AtomField, Matrix};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

use super::moments::MomentMap;

/// Value and derivatives of `lambda(t, x, r)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPartials<T> {
    pub value: T,
    pub dt: T,
    pub dx: Vec<T>,
    pub dr: Vec<T>,
    pub dt_dx: Vec<T>,
    pub dt_dr: Vec<T>,
    /// `d x d`.
    pub dxx: Matrix<T>,
    /// `∂_x ∂_r lambda`, `d x k`.
    pub dxr: Matrix<T>,
    /// `k x k`.
    pub drr: Matrix<T>,
}

impl<T: Real> ConstraintPartials<T> {
    pub fn zero(d: usize, k: usize) -> Self {
        Self {
            value: T::zero(),
            dt: T::zero(),
            dx: vec![T::zero(); d],
            dr: vec![T::zero(); k],
            dt_dx: vec![T::zero(); d],
            dt_dr: vec![T::zero(); k],
            dxx: Matrix::zeros(d, d),
            dxr: Matrix::zeros(d, k),
            drr: Matrix::zeros(k, k),
        }
    }

    fn add_scaled(&mut self, s: T, o: &Self) {
        self.value += s * o.value;
        self.dt += s * o.dt;
        axpy(&mut self.dx, s, &o.dx);
        axpy(&mut self.dr, s, &o.dr);
        axpy(&mut self.dt_dx, s, &o.dt_dx);
        axpy(&mut self.dt_dr, s, &o.dt_dr);
        self.dxx.add_scaled(s, &o.dxx);
        self.dxr.add_scaled(s, &o.dxr);
        self.drr.add_scaled(s, &o.drr);
    }
}

pub type ConstraintFn<T> = Arc<dyn Fn(T, &[T], &[T]) -> ConstraintPartials<T> + Send + Sync>;

/// State constraint integrand `lambda(t, x, r)`; the constraint reads `Lambda(t, mu) <= 0`.
#[derive(Clone)]
pub enum ConstraintIntegrand<T> {
    /// `<a, x> + <c, r> + b + rate t`.
    Affine { a: Vec<T>, c: Vec<T>, b: T, rate: T },
    /// `|x - center - t velocity|^2 / 2 - radius^2 / 2`.
    Ball { center: Vec<T>, velocity: Vec<T>, radius: T },
    /// `|r - target|^2 / 2 + b`.
    MomentQuadratic { target: Vec<T>, b: T },
    /// `s <x, r>`; needs moments in `R^d`.
    Bilinear { s: T },
    /// `sum_j s_j lambda_j`.
    Sum(Vec<(T, ConstraintIntegrand<T>)>),
    Custom(ConstraintFn<T>),
}

impl<T: fmt::Debug> fmt::Debug for ConstraintIntegrand<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintIntegrand::Affine { a, c, b, rate } => {
                f.debug_struct("Affine").field("a", a).field("c", c).field("b", b).field("rate", rate).finish()
            }
            ConstraintIntegrand::Ball { center, velocity, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("velocity", velocity)
                .field("radius", radius)
                .finish(),
            ConstraintIntegrand::MomentQuadratic { target, b } => {
                f.debug_struct("MomentQuadratic").field("target", target).field("b", b).finish()
            }
            ConstraintIntegrand::Bilinear { s } => f.debug_struct("Bilinear").field("s", s).finish(),
            ConstraintIntegrand::Sum(terms) => f.debug_tuple("Sum").field(terms).finish(),
            ConstraintIntegrand::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl<T: Real> ConstraintIntegrand<T> {
    pub fn partials(&self, t: T, x: &[T], r: &[T]) -> ConstraintPartials<T> {
        let (d, k) = (x.len(), r.len());
        let half = T::lit(0.5);
        let mut p = ConstraintPartials::zero(d, k);
        match self {
            ConstraintIntegrand::Affine { a, c, b, rate } => {
                p.value = dot(a, x) + dot(c, r) + *b + *rate * t;
                p.dt = *rate;
                p.dx = a.clone();
                p.dr = c.clone();
            }
            ConstraintIntegrand::Ball { center, velocity, radius } => {
                let e: Vec<T> = (0..d).map(|i| x[i] - center[i] - t * velocity[i]).collect();
                p.value = half * (dot(&e, &e) - *radius * *radius);
                p.dt = -dot(&e, velocity);
                p.dt_dx = velocity.iter().map(|&v| -v).collect();
                p.dx = e;
                p.dxx = Matrix::identity(d);
            }
            ConstraintIntegrand::MomentQuadratic { target, b } => {
                let e: Vec<T> = r.iter().zip(target).map(|(&a, &c)| a - c).collect();
                p.value = half * dot(&e, &e) + *b;
                p.dr = e;
                p.drr = Matrix::identity(k);
            }
            ConstraintIntegrand::Bilinear { s } => {
                p.value = *s * dot(x, r);
                p.dx = r.iter().map(|&v| *s * v).collect();
                p.dr = x.iter().map(|&v| *s * v).collect();
                p.dxr = Matrix::identity(d).scaled(*s);
            }
            ConstraintIntegrand::Sum(terms) => {
                for (s, term) in terms {
                    p.add_scaled(*s, &term.partials(t, x, r));
                }
            }
            ConstraintIntegrand::Custom(f) => p = f(t, x, r),
        }
        p
    }

    fn check(&self, dim: usize, moments: usize) -> Result<()> {
        match self {
            ConstraintIntegrand::Affine { a, c, .. } => {
                check_dim(dim, a.len())?;
                check_dim(moments, c.len())
            }
            ConstraintIntegrand::Ball { center, velocity, .. } => {
                check_dim(dim, center.len())?;
                check_dim(dim, velocity.len())
            }
            ConstraintIntegrand::MomentQuadratic { target, .. } => check_dim(moments, target.len()),
            ConstraintIntegrand::Bilinear { .. } => check_dim(dim, moments),
            ConstraintIntegrand::Sum(terms) => terms.iter().try_for_each(|(_, t)| t.check(dim, moments)),
            ConstraintIntegrand::Custom(_) => Ok(()),
        }
    }
}

/// `Lambda(t, mu) = ∫ lambda(t, x, ∫ m dmu) dmu`.
#[derive(Debug, Clone)]
pub struct StateConstraint<T> {
    pub integrand: ConstraintIntegrand<T>,
    pub moments: MomentMap<T>,
}

/// Measure-level quantities of a constraint frozen at `(t, mu)`; pointwise maps are then cheap.
#[derive(Debug, Clone)]
pub struct PreparedConstraint<'a, T> {
    constraint: &'a StateConstraint<T>,
    t: T,
    dim: usize,
    r: Vec<T>,
    value: T,
    dt: T,
    mean_dr: Vec<T>,
    mean_dt_dr: Vec<T>,
    mean_drr: Matrix<T>,
}

impl<T: Real> StateConstraint<T> {
    pub fn new(integrand: ConstraintIntegrand<T>, moments: MomentMap<T>) -> Self {
        Self { integrand, moments }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.moments.check(dim)?;
        self.integrand.check(dim, self.moments.len(dim))
    }

    pub fn prepare(&self, t: T, mu: &DiscreteMeasure<T>) -> Result<PreparedConstraint<'_, T>> {
        self.validate(mu.dim())?;
        let r = self.moments.integrate(mu);
        let k = r.len();
        let mut out = PreparedConstraint {
            constraint: self,
            t,
            dim: mu.dim(),
            value: T::zero(),
            dt: T::zero(),
            mean_dr: vec![T::zero(); k],
            mean_dt_dr: vec![T::zero(); k],
            mean_drr: Matrix::zeros(k, k),
            r,
        };
        for (x, &w) in mu.points().zip(mu.weights()) {
            let p = self.integrand.partials(t, x, &out.r);
            out.value += w * p.value;
            out.dt += w * p.dt;
            axpy(&mut out.mean_dr, w, &p.dr);
            axpy(&mut out.mean_dt_dr, w, &p.dt_dr);
            out.mean_drr.add_scaled(w, &p.drr);
        }
        Ok(out)
    }
}

impl<T: Real> PreparedConstraint<'_, T> {
    pub fn value(&self) -> T {
        self.value
    }

    /// `∂_t Lambda`.
    pub fn time_partial(&self) -> T {
        self.dt
    }

    fn partials(&self, x: &[T]) -> ConstraintPartials<T> {
        self.constraint.integrand.partials(self.t, x, &self.r)
    }

    /// `∇_mu Lambda(x) = ∇_x lambda(x) + Dm(x)^T ∫ ∇_r lambda`.
    pub fn grad_at(&self, x: &[T]) -> Vec<T> {
        let mut g = self.partials(x).dx;
        axpy(&mut g, T::one(), &self.constraint.moments.jacobian(x).tr_mul_vec(&self.mean_dr));
        g
    }

    /// `∂_t ∇_mu Lambda(x)`.
    pub fn time_partial_of_grad_at(&self, x: &[T]) -> Vec<T> {
        let mut g = self.partials(x).dt_dx;
        axpy(&mut g, T::one(), &self.constraint.moments.jacobian(x).tr_mul_vec(&self.mean_dt_dr));
        g
    }

    /// `D_x ∇_mu Lambda(x) = D²_xx lambda + sum_a (∫ ∂_{r_a} lambda) ∇² m_a`.
    pub fn space_jacobian_of_grad_at(&self, x: &[T]) -> Matrix<T> {
        let mut j = self.partials(x).dxx;
        j.add_assign(&self.constraint.moments.weighted_hessian(&self.mean_dr, self.dim));
        j
    }

    /// Measure derivative of `mu -> ∇_mu Lambda(mu)(x)` at `y`:
    /// `D²_xr lambda(x) Dm(y) + Dm(x)^T [D²_rx lambda(y) + (∫ D²_rr lambda) Dm(y)]`.
    pub fn gamma_of_grad_at(&self, x: &[T], y: &[T]) -> Matrix<T> {
        let px = self.partials(x);
        let py = self.partials(y);
        let m = &self.constraint.moments;
        let dmx = m.jacobian(x);
        let dmy = m.jacobian(y);
        let mut inner = py.dxr.transpose();
        inner.add_assign(&self.mean_drr.mul(&dmy));
        let mut g = px.dxr.mul(&dmy);
        g.add_assign(&dmx.transpose().mul(&inner));
        g
    }

    pub fn grad(&self, mu: &DiscreteMeasure<T>) -> AtomField<T> {
        AtomField::from_fn(mu.dim(), mu.len(), |i| self.grad_at(mu.point(i)))
    }
}

pub fn eval_constraint<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<T> {
    Ok(c.prepare(t, mu)?.value())
}

pub fn grad_constraint<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<AtomField<T>> {
    Ok(c.prepare(t, mu)?.grad(mu))
}

pub fn time_partial<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<T> {
    Ok(c.prepare(t, mu)?.time_partial())
}

pub fn time_partial_of_grad<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<AtomField<T>> {
    let p = c.prepare(t, mu)?;
    Ok(AtomField::from_fn(mu.dim(), mu.len(), |i| p.time_partial_of_grad_at(mu.point(i))))
}

pub fn space_jacobian_of_grad<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<Vec<Matrix<T>>> {
    let p = c.prepare(t, mu)?;
    Ok(mu.points().map(|x| p.space_jacobian_of_grad_at(x)).collect())
}

/// `Γ^{∇Λ}_{(t, x_i)}(x_j)` for all atom pairs, indexed `[i][j]`.
pub fn gamma_of_grad<T: Real>(c: &StateConstraint<T>, t: T, mu: &DiscreteMeasure<T>) -> Result<Vec<Vec<Matrix<T>>>> {
    let p = c.prepare(t, mu)?;
    Ok(mu.points().map(|x| mu.points().map(|y| p.gamma_of_grad_at(x, y)).collect()).collect())
}
