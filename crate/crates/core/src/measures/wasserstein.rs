use std::cmp::Ordering;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, Matrix};
use crate::scalar::Real;

use super::{cost_matrix, solve_assignment, solve_transport, Coupling, DiscreteMeasure};

fn is_uniform<T: Real>(mu: &DiscreteMeasure<T>) -> bool {
    let w0 = mu.weight(0);
    mu.weights().iter().all(|&w| w == w0)
}

fn canonical_order<T: Real>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> Ordering {
    let key = |m: &DiscreteMeasure<T>| m.weights().iter().chain(m.flat_points()).map(|v| v.as_f64()).collect::<Vec<_>>();
    a.len().cmp(&b.len()).then_with(|| {
        key(a).iter().zip(key(b).iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

/// Exact `W_p` for `p` in {1, 2}, together with an optimal plan.
pub fn wasserstein_with_coupling<T: Real>(
    p: u32,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
) -> Result<(T, Coupling<T>)> {
    if p != 1 && p != 2 {
        return Err(Error::InvalidParameter(format!("order p = {p} is not supported, use 1 or 2")));
    }
    check_dim(mu.dim(), nu.dim())?;
    if canonical_order(nu, mu) == Ordering::Less {
        // Solve in a fixed argument order so that W(mu, nu) and W(nu, mu) agree bit for bit.
        let (w, plan) = wasserstein_with_coupling(p, nu, mu)?;
        let flipped = Coupling::new(mu.clone(), nu.clone(), plan.joint().transpose())?;
        return Ok((w, flipped));
    }
    let cost = cost_matrix(mu, nu, p);
    let (joint, total) = if mu.len() == nu.len() && is_uniform(mu) && is_uniform(nu) {
        let (assign, total) = solve_assignment(&cost)?;
        let w = mu.weight(0);
        let mut joint = Matrix::zeros(mu.len(), nu.len());
        for (i, &j) in assign.iter().enumerate() {
            joint[(i, j)] = w;
        }
        (joint, total * w)
    } else {
        let plan = solve_transport(mu.weights(), nu.weights(), &cost)?;
        (plan.flow, plan.cost)
    };
    let total = total.max(T::zero());
    let value = if p == 1 { total } else { total.sqrt() };
    let coupling = Coupling::new(mu.clone(), nu.clone(), joint)
        .map_err(|e| Error::Infeasible(format!("solver returned an invalid plan: {e}")))?;
    Ok((value, coupling))
}

/// Exact `W_p` for `p` in {1, 2}.
pub fn wasserstein<T: Real>(p: u32, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<T> {
    wasserstein_with_coupling(p, mu, nu).map(|(w, _)| w)
}

/// `∫phi d(mu - nu)` for a test function checked to be 1-Lipschitz on both supports.
pub fn w1_dual_bound<T, F>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>, phi: F) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    check_dim(mu.dim(), nu.dim())?;
    let pts: Vec<&[T]> = mu.points().chain(nu.points()).collect();
    let vals: Vec<T> = pts.iter().map(|x| phi(x)).collect();
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let gap = (vals[a] - vals[b]).abs();
            let d = dist(pts[a], pts[b]);
            if gap > d + slack * (T::one() + d) {
                return Err(Error::NotLipschitz { gap: gap.as_f64(), distance: d.as_f64() });
            }
        }
    }
    let n = mu.len();
    let a: T = (0..n).map(|i| mu.weight(i) * vals[i]).sum();
    let b: T = (0..nu.len()).map(|j| nu.weight(j) * vals[n + j]).sum();
    Ok(a - b)
}

/// Returns `(W1(g1, g2), sum_i mu_i W1(g1_{x_i}, g2_{x_i}))` for two plans sharing a first marginal.
pub fn disintegration_bound_check<T: Real>(g1: &Coupling<T>, g2: &Coupling<T>) -> Result<(T, T)> {
    let (s1, s2) = (g1.source(), g2.source());
    check_dim(s1.dim(), s2.dim())?;
    check_dim(g1.target().dim(), g2.target().dim())?;
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(64.0));
    if s1.len() != s2.len()
        || s1.flat_points() != s2.flat_points()
        || s1.weights().iter().zip(s2.weights()).any(|(&a, &b)| (a - b).abs() > tol)
    {
        return Err(Error::MarginalMismatch);
    }
    let lhs = wasserstein(1, &g1.as_product_measure()?, &g2.as_product_measure()?)?;
    let mut rhs = T::zero();
    for i in 0..s1.len() {
        if let (Some(a), Some(b)) = (g1.disintegration(i), g2.disintegration(i)) {
            rhs += s1.weight(i) * wasserstein(1, &a, &b)?;
        }
    }
    Ok((lhs, rhs))
}
