use crate::error::{check_dim, Result};
use crate::fields::{cloud_velocity, cloud_velocity_jacobian, ControlField, InteractionKernel};
use crate::functionals::StateConstraint;
use crate::linalg::{axpy, dot, AtomField};
use crate::measures::DiscreteMeasure;
use crate::scalar::Real;

/// `C(t, mu, zeta, omega) = sum_l zeta_l (∂_t Lambda_l + ∫ <∇_mu Lambda_l, v[mu] + omega> dmu)`.
pub fn penalized_constraint<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    constraints: &[StateConstraint<T>],
    zeta: &[T],
    t: T,
    mu: &DiscreteMeasure<T>,
    omega: &ControlField<T>,
) -> Result<T> {
    check_dim(constraints.len(), zeta.len())?;
    check_dim(mu.dim(), omega.dim())?;
    let drift = drift(kernel, t, mu, omega);
    let mut total = T::zero();
    for (c, &z) in constraints.iter().zip(zeta) {
        if z == T::zero() {
            continue;
        }
        let p = c.prepare(t, mu)?;
        let flux: T = mu.points().zip(mu.weights()).zip(drift.iter()).map(|((x, &w), s)| w * dot(&p.grad_at(x), s)).sum();
        total += z * (p.time_partial() + flux);
    }
    Ok(total)
}

/// Wasserstein gradient of `penalized_constraint` at the atoms:
///
/// `∂_t ∇Λ + D∇Λ^T s + (Dv + Dω)^T ∇Λ + ∫ Γ^v_x(z)^T ∇Λ(x) dmu(x) + ∫ Γ^{∇Λ}_x(z)^T s(x) dmu(x)`
/// with `s = v[mu] + omega`, summed with the weights `zeta_l`.
pub fn grad_penalized_constraint<T: Real>(
    kernel: &dyn InteractionKernel<T>,
    constraints: &[StateConstraint<T>],
    zeta: &[T],
    t: T,
    mu: &DiscreteMeasure<T>,
    omega: &ControlField<T>,
) -> Result<AtomField<T>> {
    check_dim(constraints.len(), zeta.len())?;
    check_dim(mu.dim(), omega.dim())?;
    let d = mu.dim();
    let n = mu.len();
    let mut out = AtomField::zeros(d, n);
    if zeta.iter().all(|&z| z == T::zero()) {
        return Ok(out);
    }
    let s = drift(kernel, t, mu, omega);
    let pts = mu.flat_points();
    let w = mu.weights();
    let jac: Vec<_> = mu
        .points()
        .map(|x| {
            let mut j = cloud_velocity_jacobian(kernel, pts, w, t, x);
            j.add_assign(&omega.jacobian(x));
            j
        })
        .collect();
    for (c, &z) in constraints.iter().zip(zeta) {
        if z == T::zero() {
            continue;
        }
        let p = c.prepare(t, mu)?;
        let g: Vec<Vec<T>> = mu.points().map(|x| p.grad_at(x)).collect();
        for i in 0..n {
            let xi = mu.point(i);
            let mut acc = p.time_partial_of_grad_at(xi);
            axpy(&mut acc, T::one(), &p.space_jacobian_of_grad_at(xi).tr_mul_vec(&s[i]));
            axpy(&mut acc, T::one(), &jac[i].tr_mul_vec(&g[i]));
            for j in 0..n {
                let xj = mu.point(j);
                if !kernel.is_decoupled() {
                    axpy(&mut acc, w[j], &kernel.jac_y(t, xj, xi).tr_mul_vec(&g[j]));
                }
                axpy(&mut acc, w[j], &p.gamma_of_grad_at(xj, xi).tr_mul_vec(&s[j]));
            }
            axpy(out.at_mut(i), z, &acc);
        }
    }
    Ok(out)
}

fn drift<T: Real>(kernel: &dyn InteractionKernel<T>, t: T, mu: &DiscreteMeasure<T>, omega: &ControlField<T>) -> Vec<Vec<T>> {
    mu.points()
        .map(|x| {
            let mut s = cloud_velocity(kernel, mu.flat_points(), mu.weights(), t, x);
            axpy(&mut s, T::one(), &omega.eval(x));
            s
        })
        .collect()
}
