use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::AtomField;
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

/// Default displacement step for the chain-rule difference.
pub const DEFAULT_STEP: f64 = 1e-4;

/// `[F((Id + hV)#mu) - F((Id - hV)#mu)] / 2h`. Atoms are moved individually and never merged.
pub fn chainrule_fd_oracle<T, F>(f: F, mu: &DiscreteMeasure<T>, v: &AtomField<T>, h: T) -> Result<T>
where
    T: Real,
    F: Fn(&DiscreteMeasure<T>) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(format!("step {h} must be positive")));
    }
    if v.len() != mu.len() || v.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.len() * mu.dim(), found: v.as_slice().len() });
    }
    let plus = f(&mu.displaced(v.as_slice(), h)?)?;
    let minus = f(&mu.displaced(v.as_slice(), -h)?)?;
    Ok((plus - minus) / (h + h))
}

/// Comparison of an analytic directional derivative against the oracle at `h` and `h/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainruleCheck {
    pub analytic: f64,
    pub fd: f64,
    pub fd_half: f64,
    pub richardson: f64,
    /// `|fd - analytic| / (1 + |analytic|)`.
    pub rel_error: f64,
    /// Same measure for the extrapolated value; large gaps between the two flag a step problem.
    pub richardson_rel_error: f64,
}

impl ChainruleCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.rel_error <= tol
    }
}

pub fn chainrule_check<T, F>(f: F, mu: &DiscreteMeasure<T>, v: &AtomField<T>, analytic: T, h: T) -> Result<ChainruleCheck>
where
    T: Real,
    F: Fn(&DiscreteMeasure<T>) -> Result<T>,
{
    let fd = chainrule_fd_oracle(&f, mu, v, h)?;
    let fd_half = chainrule_fd_oracle(&f, mu, v, h * T::lit(0.5))?;
    let richardson = (T::lit(4.0) * fd_half - fd) / T::lit(3.0);
    let scale = T::one() + analytic.abs();
    Ok(ChainruleCheck {
        analytic: analytic.as_f64(),
        fd: fd.as_f64(),
        fd_half: fd_half.as_f64(),
        richardson: richardson.as_f64(),
        rel_error: ((fd - analytic).abs() / scale).as_f64(),
        richardson_rel_error: ((richardson - analytic).abs() / scale).as_f64(),
    })
}
