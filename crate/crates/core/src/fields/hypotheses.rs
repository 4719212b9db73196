use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{dist, norm};
use crate::scalar::Real;

use super::kernel::{central_jacobian, sublinear_ratio};
use super::{ControlLaw, InteractionKernel};

/// Sampled regularity constants of a kernel next to the declared ones.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub declared_m: f64,
    pub declared_l1: f64,
    pub declared_l2: f64,
    pub estimated_m: f64,
    pub estimated_l1: f64,
    pub estimated_l2: f64,
    /// Largest relative gap between analytic and differenced Jacobians.
    pub jacobian_error: f64,
    pub sublinearity_holds: bool,
    pub lipschitz_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlCheck {
    pub bound: f64,
    /// Worst cell value of `sup|u| + Lip(u)` over the sampled ball.
    pub estimated: f64,
    pub worst_cell: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub radius: f64,
    pub samples: usize,
    pub kernel: KernelCheck,
    pub control: ControlCheck,
    /// Caveats that sampling cannot settle.
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.kernel.sublinearity_holds && self.kernel.lipschitz_holds && self.control.holds
    }
}

fn sample_ball<T: Real>(rng: &mut ChaCha8Rng, dim: usize, radius: T) -> Vec<T> {
    let mut x: Vec<T> = (0..dim).map(|_| T::lit(rng.gen_range(-1.0..=1.0))).collect();
    let n = norm(&x);
    if n > T::one() {
        x.iter_mut().for_each(|v| *v /= n);
    }
    x.into_iter().map(|v| v * radius).collect()
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if den > T::epsilon() {
        num / den
    } else {
        T::zero()
    }
}

/// Samples the kernel and control on the ball of `radius` and compares with declared constants.
pub fn check_hypotheses<T, K>(kernel: &K, law: &ControlLaw<T>, radius: T, samples: usize) -> HypothesisReport
where
    T: Real,
    K: InteractionKernel<T> + ?Sized,
{
    check_hypotheses_seeded(kernel, law, radius, samples, 0)
}

pub fn check_hypotheses_seeded<T, K>(
    kernel: &K,
    law: &ControlLaw<T>,
    radius: T,
    samples: usize,
    seed: u64,
) -> HypothesisReport
where
    T: Real,
    K: InteractionKernel<T> + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = kernel.dim();
    let horizon = law.grid().horizon();
    let declared = kernel.bounds(radius);
    let (mut m, mut l1, mut l2, mut jac_err) = (T::zero(), T::zero(), T::zero(), T::zero());
    for _ in 0..samples.max(1) {
        let t = horizon * T::lit(rng.gen_range(0.0..=1.0));
        let x = sample_ball(&mut rng, dim, radius);
        let y = sample_ball(&mut rng, dim, radius);
        let x2 = sample_ball(&mut rng, dim, radius);
        let y2 = sample_ball(&mut rng, dim, radius);
        let h = kernel.eval(t, &x, &y);
        m = m.max(sublinear_ratio(&h, &x));
        let hx = kernel.eval(t, &x2, &y);
        l1 = l1.max(ratio(dist(&h, &hx), dist(&x, &x2)));
        let hy = kernel.eval(t, &x, &y2);
        l2 = l2.max(ratio(dist(&h, &hy), dist(&y, &y2)));

        let jx = kernel.jac_x(t, &x, &y);
        let jy = kernel.jac_y(t, &x, &y);
        let fx = central_jacobian(&x, |p| kernel.eval(t, p, &y));
        let fy = central_jacobian(&y, |p| kernel.eval(t, &x, p));
        let scale = T::one() + jx.max_abs().max(jy.max_abs());
        jac_err = jac_err.max(jx.max_abs_diff(&fx) / scale).max(jy.max_abs_diff(&fy) / scale);
    }
    let slack = T::one() + T::lit(1e-9);
    let kernel_check = KernelCheck {
        declared_m: declared.m.as_f64(),
        declared_l1: declared.l1.as_f64(),
        declared_l2: declared.l2.as_f64(),
        estimated_m: m.as_f64(),
        estimated_l1: l1.as_f64(),
        estimated_l2: l2.as_f64(),
        jacobian_error: jac_err.as_f64(),
        sublinearity_holds: m <= declared.m * slack,
        lipschitz_holds: l1 <= declared.l1 * slack && l2 <= declared.l2 * slack,
    };

    let (mut worst, mut worst_cell) = (T::zero(), 0);
    for cell in 0..law.cells() {
        let (mut sup, mut lip) = (T::zero(), T::zero());
        for _ in 0..samples.max(1) {
            let x = sample_ball(&mut rng, dim, radius);
            sup = sup.max(norm(&law.eval_in_cell(cell, &x)));
            lip = lip.max(law.jacobian_in_cell(cell, &x).spectral_norm());
        }
        if sup + lip > worst {
            worst = sup + lip;
            worst_cell = cell;
        }
    }
    let control = ControlCheck {
        bound: law.bound().as_f64(),
        estimated: worst.as_f64(),
        worst_cell,
        holds: worst <= law.bound() * slack,
    };

    let mut notes = vec![
        "constants are sampled lower estimates; measure differentiability of the velocity is not proven by sampling"
            .to_string(),
    ];
    if jac_err > T::lit(1e-5) {
        notes.push(format!("kernel Jacobians deviate from central differences by {}", jac_err));
    }
    if !kernel_check.sublinearity_holds {
        log::warn!("sampled sublinearity constant {} exceeds declared {}", kernel_check.estimated_m, kernel_check.declared_m);
    }
    if !control.holds {
        log::warn!("control bound {} exceeded on cell {}: {}", control.bound, control.worst_cell, control.estimated);
    }
    HypothesisReport { radius: radius.as_f64(), samples, kernel: kernel_check, control, notes }
}
