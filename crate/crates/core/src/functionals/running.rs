use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::fields::{ControlField, ControlLaw};
use crate::linalg::{dot, AtomField};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;
use crate::time::Instant;

use super::moments::MomentMap;

/// Partials of `l(t, x, v, r)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandPartials<T> {
    pub value: T,
    pub dx: Vec<T>,
    pub dv: Vec<T>,
    pub dr: Vec<T>,
}

pub type IntegrandFn<T> = Arc<dyn Fn(Instant<T>, &[T], &[T], &[T]) -> IntegrandPartials<T> + Send + Sync>;

/// Running cost integrand `l(t, x, v, r)`.
#[derive(Clone)]
pub enum RunningIntegrand<T> {
    /// `|v|^2 / 2`.
    Effort,
    /// `|v - ref(cell)|^2 / 2` with one reference velocity per control cell.
    Tracking { reference: Vec<Vec<T>> },
    /// `<a, x>`.
    LinearPosition { a: Vec<T> },
    /// `<a, r>`.
    MomentLinear { a: Vec<T> },
    /// `|x - r|^2 / 2`; needs a moment map with values in `R^d`.
    Attraction,
    /// `|x - c|^2 / 2`.
    QuadraticPosition { center: Vec<T> },
    /// `sum_j s_j l_j`.
    Sum(Vec<(T, RunningIntegrand<T>)>),
    Custom(IntegrandFn<T>),
}

impl<T: fmt::Debug> fmt::Debug for RunningIntegrand<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunningIntegrand::Effort => f.write_str("Effort"),
            RunningIntegrand::Tracking { reference } => f.debug_struct("Tracking").field("cells", &reference.len()).finish(),
            RunningIntegrand::LinearPosition { a } => f.debug_struct("LinearPosition").field("a", a).finish(),
            RunningIntegrand::MomentLinear { a } => f.debug_struct("MomentLinear").field("a", a).finish(),
            RunningIntegrand::Attraction => f.write_str("Attraction"),
            RunningIntegrand::QuadraticPosition { center } => {
                f.debug_struct("QuadraticPosition").field("center", center).finish()
            }
            RunningIntegrand::Sum(terms) => f.debug_tuple("Sum").field(terms).finish(),
            RunningIntegrand::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn diff<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

impl<T: Real> RunningIntegrand<T> {
    pub fn partials(&self, at: Instant<T>, x: &[T], v: &[T], r: &[T]) -> IntegrandPartials<T> {
        let (d, k) = (x.len(), r.len());
        let zeros = |n: usize| vec![T::zero(); n];
        let half = T::lit(0.5);
        match self {
            RunningIntegrand::Effort => {
                IntegrandPartials { value: half * dot(v, v), dx: zeros(d), dv: v.to_vec(), dr: zeros(k) }
            }
            RunningIntegrand::Tracking { reference } => {
                let e = diff(v, &reference[at.cell.min(reference.len() - 1)]);
                IntegrandPartials { value: half * dot(&e, &e), dx: zeros(d), dv: e, dr: zeros(k) }
            }
            RunningIntegrand::LinearPosition { a } => {
                IntegrandPartials { value: dot(a, x), dx: a.clone(), dv: zeros(d), dr: zeros(k) }
            }
            RunningIntegrand::MomentLinear { a } => {
                IntegrandPartials { value: dot(a, r), dx: zeros(d), dv: zeros(d), dr: a.clone() }
            }
            RunningIntegrand::Attraction => {
                let e = diff(x, r);
                let dr = e.iter().map(|&c| -c).collect();
                IntegrandPartials { value: half * dot(&e, &e), dx: e, dv: zeros(d), dr }
            }
            RunningIntegrand::QuadraticPosition { center } => {
                let e = diff(x, center);
                IntegrandPartials { value: half * dot(&e, &e), dx: e, dv: zeros(d), dr: zeros(k) }
            }
            RunningIntegrand::Sum(terms) => {
                let mut acc = IntegrandPartials { value: T::zero(), dx: zeros(d), dv: zeros(d), dr: zeros(k) };
                for (s, term) in terms {
                    let p = term.partials(at, x, v, r);
                    acc.value += *s * p.value;
                    crate::linalg::axpy(&mut acc.dx, *s, &p.dx);
                    crate::linalg::axpy(&mut acc.dv, *s, &p.dv);
                    crate::linalg::axpy(&mut acc.dr, *s, &p.dr);
                }
                acc
            }
            RunningIntegrand::Custom(f) => f(at, x, v, r),
        }
    }

    fn check(&self, dim: usize, moments: usize, cells: Option<usize>) -> Result<()> {
        match self {
            RunningIntegrand::Tracking { reference } => {
                if reference.is_empty() {
                    return Err(Error::InvalidParameter("tracking reference needs at least one cell".into()));
                }
                if let Some(c) = cells {
                    if reference.len() != 1 {
                        check_dim(c, reference.len())?;
                    }
                }
                reference.iter().try_for_each(|r| check_dim(dim, r.len()))
            }
            RunningIntegrand::LinearPosition { a } => check_dim(dim, a.len()),
            RunningIntegrand::MomentLinear { a } => check_dim(moments, a.len()),
            RunningIntegrand::Attraction => check_dim(dim, moments),
            RunningIntegrand::QuadraticPosition { center } => check_dim(dim, center.len()),
            RunningIntegrand::Sum(terms) => terms.iter().try_for_each(|(_, t)| t.check(dim, moments, cells)),
            _ => Ok(()),
        }
    }
}

/// `L(t, mu, omega) = ∫ l(t, x, omega(x), ∫ m dmu) dmu`.
#[derive(Debug, Clone)]
pub struct RunningCost<T> {
    pub integrand: RunningIntegrand<T>,
    pub moments: MomentMap<T>,
}

impl<T: Real> RunningCost<T> {
    pub fn new(integrand: RunningIntegrand<T>, moments: MomentMap<T>) -> Self {
        Self { integrand, moments }
    }

    /// No running cost.
    pub fn zero() -> Self {
        Self::new(RunningIntegrand::Sum(Vec::new()), MomentMap::Zero { k: 0 })
    }

    /// Checks parameter shapes against the state dimension and, if known, the number of control cells.
    pub fn validate(&self, dim: usize, cells: Option<usize>) -> Result<()> {
        self.moments.check(dim)?;
        self.integrand.check(dim, self.moments.len(dim), cells)
    }

    pub fn value(&self, at: Instant<T>, mu: &DiscreteMeasure<T>, omega: &ControlField<T>) -> Result<T> {
        check_dim(mu.dim(), omega.dim())?;
        self.validate(mu.dim(), None)?;
        let r = self.moments.integrate(mu);
        Ok(mu.integrate(|x| self.integrand.partials(at, x, &omega.eval(x), &r).value))
    }

    /// `∇_x l + Dω(x)^T ∇_v l + Dm(x)^T ∫ ∇_r l dmu`, at the atoms.
    pub fn gradient(&self, at: Instant<T>, mu: &DiscreteMeasure<T>, omega: &ControlField<T>) -> Result<AtomField<T>> {
        check_dim(mu.dim(), omega.dim())?;
        self.validate(mu.dim(), None)?;
        let r = self.moments.integrate(mu);
        let k = r.len();
        let parts: Vec<_> = mu.points().map(|x| self.integrand.partials(at, x, &omega.eval(x), &r)).collect();
        let mut dr_mean = vec![T::zero(); k];
        for (p, &w) in parts.iter().zip(mu.weights()) {
            crate::linalg::axpy(&mut dr_mean, w, &p.dr);
        }
        let pulled = self.moments.pull_back(mu, &dr_mean);
        Ok(AtomField::from_fn(mu.dim(), mu.len(), |i| {
            let x = mu.point(i);
            let mut g = parts[i].dx.clone();
            let dv = omega.jacobian(x).tr_mul_vec(&parts[i].dv);
            crate::linalg::axpy(&mut g, T::one(), &dv);
            crate::linalg::axpy(&mut g, T::one(), pulled.at(i));
            g
        }))
    }
}

/// Running cost of a control law at time `t` (left cell on boundaries).
pub fn eval_running<T: Real>(cost: &RunningCost<T>, t: T, mu: &DiscreteMeasure<T>, law: &ControlLaw<T>) -> Result<T> {
    let at = law.grid().instant(t)?;
    cost.value(at, mu, &law.field(at.cell))
}

pub fn grad_running<T: Real>(
    cost: &RunningCost<T>,
    t: T,
    mu: &DiscreteMeasure<T>,
    law: &ControlLaw<T>,
) -> Result<AtomField<T>> {
    let at = law.grid().instant(t)?;
    cost.gradient(at, mu, &law.field(at.cell))
}
