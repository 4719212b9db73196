use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, AtomField, Matrix};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

/// Upper bound on `n * atoms^n` for tuple enumeration.
pub const TUPLE_CAP: u128 = 1_000_000;

pub type PotentialFn<T> = Arc<dyn Fn(&[&[T]]) -> T + Send + Sync>;
pub type PotentialGradFn<T> = Arc<dyn Fn(&[&[T]], usize) -> Vec<T> + Send + Sync>;

/// Interaction potential `W(x_1, .., x_n)` with per-slot gradients.
#[derive(Clone)]
pub enum Potential<T> {
    /// `W(x) = <a, x> + b`, one slot.
    Affine { a: Vec<T>, b: T },
    /// `W(x) = |x - c|^2 / 2`, one slot.
    Quadratic { center: Vec<T> },
    /// `W(x, y) = |x - y|^2 / 2`.
    PairQuadratic,
    /// `W(x, y) = exp(-|x - y|^2 / (2 sigma^2))`.
    PairGaussian { sigma: T },
    /// `W(x, y) = x^T A y`; not symmetric unless `A` is.
    PairCross { a: Matrix<T> },
    /// `W(x, y, z) = |x + y - 2z|^2 / 2`.
    Triple,
    /// User potential; a missing gradient falls back to central differences.
    Custom { arity: usize, eval: PotentialFn<T>, grad: Option<PotentialGradFn<T>> },
}

impl<T: fmt::Debug> fmt::Debug for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Affine { a, b } => f.debug_struct("Affine").field("a", a).field("b", b).finish(),
            Potential::Quadratic { center } => f.debug_struct("Quadratic").field("center", center).finish(),
            Potential::PairQuadratic => f.write_str("PairQuadratic"),
            Potential::PairGaussian { sigma } => f.debug_struct("PairGaussian").field("sigma", sigma).finish(),
            Potential::PairCross { a } => f.debug_struct("PairCross").field("a", a).finish(),
            Potential::Triple => f.write_str("Triple"),
            Potential::Custom { arity, grad, .. } => {
                f.debug_struct("Custom").field("arity", arity).field("grad", &grad.is_some()).finish()
            }
        }
    }
}

impl<T: Real> Potential<T> {
    pub fn arity(&self) -> usize {
        match self {
            Potential::Affine { .. } | Potential::Quadratic { .. } => 1,
            Potential::PairQuadratic | Potential::PairGaussian { .. } | Potential::PairCross { .. } => 2,
            Potential::Triple => 3,
            Potential::Custom { arity, .. } => *arity,
        }
    }

    pub fn eval(&self, xs: &[&[T]]) -> T {
        let half = T::lit(0.5);
        match self {
            Potential::Affine { a, b } => dot(a, xs[0]) + *b,
            Potential::Quadratic { center } => half * sq_dist(xs[0], center),
            Potential::PairQuadratic => half * sq_dist(xs[0], xs[1]),
            Potential::PairGaussian { sigma } => (-sq_dist(xs[0], xs[1]) / (T::lit(2.0) * *sigma * *sigma)).exp(),
            Potential::PairCross { a } => dot(xs[0], &a.mul_vec(xs[1])),
            Potential::Triple => {
                let g = triple_core(xs);
                half * dot(&g, &g)
            }
            Potential::Custom { eval, .. } => eval(xs),
        }
    }

    /// `∇_{x_slot} W(xs)`.
    pub fn grad(&self, xs: &[&[T]], slot: usize) -> Vec<T> {
        match self {
            Potential::Affine { a, .. } => a.clone(),
            Potential::Quadratic { center } => xs[0].iter().zip(center).map(|(&x, &c)| x - c).collect(),
            Potential::PairQuadratic => {
                let (p, q) = if slot == 0 { (xs[0], xs[1]) } else { (xs[1], xs[0]) };
                p.iter().zip(q).map(|(&a, &b)| a - b).collect()
            }
            Potential::PairGaussian { sigma } => {
                let w = self.eval(xs);
                let (p, q) = if slot == 0 { (xs[0], xs[1]) } else { (xs[1], xs[0]) };
                let s2 = *sigma * *sigma;
                p.iter().zip(q).map(|(&a, &b)| -w * (a - b) / s2).collect()
            }
            Potential::PairCross { a } => {
                if slot == 0 {
                    a.mul_vec(xs[1])
                } else {
                    a.tr_mul_vec(xs[0])
                }
            }
            Potential::Triple => {
                let g = triple_core(xs);
                let s = if slot == 2 { T::lit(-2.0) } else { T::one() };
                g.into_iter().map(|v| s * v).collect()
            }
            Potential::Custom { grad: Some(g), .. } => g(xs, slot),
            Potential::Custom { eval, .. } => {
                let at = xs[slot];
                let mut p = at.to_vec();
                let base = T::epsilon().cbrt();
                let mut out = Vec::with_capacity(at.len());
                for k in 0..at.len() {
                    let h = base * at[k].abs().max(T::one());
                    p[k] = at[k] + h;
                    let fp = eval(&replace_slot(xs, slot, &p));
                    p[k] = at[k] - h;
                    let fm = eval(&replace_slot(xs, slot, &p));
                    p[k] = at[k];
                    out.push((fp - fm) / (h + h));
                }
                out
            }
        }
    }
}

fn replace_slot<'a, T>(xs: &[&'a [T]], slot: usize, p: &'a [T]) -> Vec<&'a [T]> {
    let mut v = xs.to_vec();
    v[slot] = p;
    v
}

fn triple_core<T: Real>(xs: &[&[T]]) -> Vec<T> {
    let two = T::lit(2.0);
    (0..xs[0].len()).map(|k| xs[0][k] + xs[1][k] - two * xs[2][k]).collect()
}

fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y))
}

/// Terminal functional of a measure.
#[derive(Debug, Clone)]
pub enum TerminalFunctional<T> {
    /// `∫ W(x_1..x_n) dmu^{⊗n}`.
    NBody(Potential<T>),
    /// `1/2 ∫ |x - mean|^2 dmu`.
    Variance,
    /// `1/2 ∫ d_S(x)^2 dmu` for a finite point set `S` stored row-major.
    SupportDistance { dim: usize, targets: Vec<T> },
    /// `∫ sum_k sum_p c_p x_k^p dmu`. `derivative`, when given, replaces the true derivative
    /// coefficients (`sum_q d_q x_k^q`); this exists so that wrong gradients can be exercised.
    SeparablePolynomial { coeffs: Vec<T>, derivative: Option<Vec<T>> },
    /// `inner(mu) + shift`.
    Shifted(Box<TerminalFunctional<T>>, T),
}

fn check_cap(n: usize, atoms: usize) -> Result<()> {
    let work = (n as u128).saturating_mul((atoms as u128).saturating_pow(n as u32));
    if work > TUPLE_CAP {
        Err(Error::CombinatorialCap { work, cap: TUPLE_CAP })
    } else {
        Ok(())
    }
}

/// Calls `f(indices, product of weights)` for every tuple of `len` atoms.
fn for_each_tuple<T: Real, F: FnMut(&[usize], T)>(weights: &[T], len: usize, mut f: F) {
    let n = weights.len();
    let mut idx = vec![0usize; len];
    loop {
        let w = idx.iter().fold(T::one(), |p, &i| p * weights[i]);
        f(&idx, w);
        let mut k = len;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl<T: Real> TerminalFunctional<T> {
    fn check(&self, mu: &DiscreteMeasure<T>) -> Result<()> {
        match self {
            TerminalFunctional::NBody(p) => {
                if let Potential::Affine { a, .. } = p {
                    check_dim(mu.dim(), a.len())?;
                }
                if let Potential::Quadratic { center } = p {
                    check_dim(mu.dim(), center.len())?;
                }
                if let Potential::PairCross { a } = p {
                    check_dim(mu.dim(), a.rows())?;
                    check_dim(mu.dim(), a.cols())?;
                }
                check_cap(p.arity(), mu.len())
            }
            TerminalFunctional::SupportDistance { dim, targets } => {
                check_dim(*dim, mu.dim())?;
                if targets.is_empty() {
                    return Err(Error::InvalidParameter("support distance needs a nonempty target set".into()));
                }
                Ok(())
            }
            TerminalFunctional::Shifted(inner, _) => inner.check(mu),
            _ => Ok(()),
        }
    }

    fn nearest(&self, x: &[T]) -> (usize, T, bool) {
        let TerminalFunctional::SupportDistance { dim, targets } = self else { unreachable!() };
        let mut best = (0usize, T::infinity());
        let mut tie = false;
        for (j, s) in targets.chunks_exact(*dim).enumerate() {
            let d = dist(x, s);
            let slack = T::lit(1e-12) * (T::one() + d);
            if d < best.1 - slack {
                best = (j, d);
                tie = false;
            } else if (d - best.1).abs() <= slack {
                tie = true;
            }
        }
        (best.0, best.1, tie)
    }

    pub fn value(&self, mu: &DiscreteMeasure<T>) -> Result<T> {
        self.check(mu)?;
        let half = T::lit(0.5);
        Ok(match self {
            TerminalFunctional::NBody(p) => {
                let mut total = T::zero();
                let mut xs: Vec<&[T]> = vec![mu.point(0); p.arity()];
                for_each_tuple(mu.weights(), p.arity(), |idx, w| {
                    for (slot, &i) in idx.iter().enumerate() {
                        xs[slot] = mu.point(i);
                    }
                    total += w * p.eval(&xs);
                });
                total
            }
            TerminalFunctional::Variance => {
                let m = mu.mean();
                half * mu.integrate(|x| sq_dist(x, &m))
            }
            TerminalFunctional::SupportDistance { .. } => half * mu.integrate(|x| self.nearest(x).1.powi(2)),
            TerminalFunctional::SeparablePolynomial { coeffs, .. } => {
                mu.integrate(|x| x.iter().map(|&xk| horner(coeffs, xk)).sum())
            }
            TerminalFunctional::Shifted(inner, c) => inner.value(mu)? + *c,
        })
    }

    /// Wasserstein gradient at every atom, with any tie-breaking warnings.
    pub fn gradient_with_warnings(&self, mu: &DiscreteMeasure<T>) -> Result<(AtomField<T>, Vec<String>)> {
        self.check(mu)?;
        let d = mu.dim();
        let mut warnings = Vec::new();
        let field = match self {
            TerminalFunctional::NBody(p) => {
                let n = p.arity();
                let mut out = AtomField::zeros(d, mu.len());
                let mut xs: Vec<&[T]> = vec![mu.point(0); n];
                for a in 0..mu.len() {
                    let mut g = vec![T::zero(); d];
                    for slot in 0..n {
                        for_each_tuple(mu.weights(), n - 1, |others, w| {
                            let mut o = others.iter();
                            for (k, x) in xs.iter_mut().enumerate() {
                                *x = if k == slot { mu.point(a) } else { mu.point(*o.next().unwrap()) };
                            }
                            for (gk, v) in g.iter_mut().zip(p.grad(&xs, slot)) {
                                *gk += w * v;
                            }
                        });
                    }
                    out.at_mut(a).copy_from_slice(&g);
                }
                out
            }
            TerminalFunctional::Variance => {
                let m = mu.mean();
                AtomField::from_fn(d, mu.len(), |i| mu.point(i).iter().zip(&m).map(|(&x, &c)| x - c).collect())
            }
            TerminalFunctional::SupportDistance { dim, targets } => AtomField::from_fn(d, mu.len(), |i| {
                let x = mu.point(i);
                let (j, _, tie) = self.nearest(x);
                if tie {
                    let msg = format!("atom {i}: several nearest target points, using index {j}");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                let s = &targets[j * dim..(j + 1) * dim];
                x.iter().zip(s).map(|(&a, &b)| a - b).collect()
            }),
            TerminalFunctional::SeparablePolynomial { coeffs, derivative } => {
                let der = match derivative {
                    Some(dc) => dc.clone(),
                    None => coeffs.iter().enumerate().skip(1).map(|(p, &c)| T::count(p) * c).collect(),
                };
                AtomField::from_fn(d, mu.len(), |i| mu.point(i).iter().map(|&x| horner(&der, x)).collect())
            }
            TerminalFunctional::Shifted(inner, _) => return inner.gradient_with_warnings(mu),
        };
        Ok((field, warnings))
    }

    pub fn gradient(&self, mu: &DiscreteMeasure<T>) -> Result<AtomField<T>> {
        self.gradient_with_warnings(mu).map(|(g, _)| g)
    }
}

fn horner<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Value of a terminal functional.
pub fn eval_terminal<T: Real>(phi: &TerminalFunctional<T>, mu: &DiscreteMeasure<T>) -> Result<T> {
    phi.value(mu)
}

/// Wasserstein gradient of a terminal functional sampled at the atoms of `mu`.
pub fn grad_terminal<T: Real>(phi: &TerminalFunctional<T>, mu: &DiscreteMeasure<T>) -> Result<AtomField<T>> {
    phi.gradient(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(points: &[f64]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::uniform(1, points.to_vec()).unwrap()
    }

    #[test]
    fn variance_examples() {
        let v = TerminalFunctional::Variance;
        assert_eq!(v.value(&DiscreteMeasure::dirac(&[3.0])).unwrap(), 0.0);
        assert_eq!(v.value(&m1(&[-1.0, 1.0])).unwrap(), 0.5);
        assert_eq!(v.gradient(&m1(&[-1.0, 1.0])).unwrap().at(1), &[1.0]);
        assert_eq!(v.gradient(&DiscreteMeasure::dirac(&[3.0])).unwrap().at(0), &[0.0]);
    }

    #[test]
    fn pair_quadratic_examples() {
        let f = TerminalFunctional::NBody(Potential::PairQuadratic);
        let mu = m1(&[0.0, 2.0]);
        assert_eq!(f.value(&mu).unwrap(), 1.0);
        assert_eq!(f.gradient(&mu).unwrap().at(0), &[-2.0]);
    }

    #[test]
    fn cap_is_enforced() {
        let f = TerminalFunctional::NBody(Potential::Triple);
        let mu = DiscreteMeasure::uniform(1, (0..100).map(f64::from).collect()).unwrap();
        assert!(matches!(f.value(&mu), Err(Error::CombinatorialCap { .. })));
    }

    #[test]
    fn support_distance_tie_is_reported() {
        let f = TerminalFunctional::SupportDistance { dim: 1, targets: vec![-1.0, 1.0] };
        let (g, w) = f.gradient_with_warnings(&DiscreteMeasure::dirac(&[0.0])).unwrap();
        assert_eq!(g.at(0), &[1.0]);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn polynomial_and_declared_derivative() {
        let f = TerminalFunctional::SeparablePolynomial { coeffs: vec![0.0, 0.0, 0.5], derivative: None };
        let mu = DiscreteMeasure::dirac(&[0.5]);
        assert_eq!(f.value(&mu).unwrap(), 0.125);
        assert_eq!(f.gradient(&mu).unwrap().at(0), &[0.5]);
        let wrong = TerminalFunctional::SeparablePolynomial { coeffs: vec![0.0, 0.0, 0.5], derivative: Some(vec![0.0, 2.0]) };
        assert_eq!(wrong.gradient(&mu).unwrap().at(0), &[1.0]);
    }
}
