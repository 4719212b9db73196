#![allow(dead_code)]

use std::sync::Arc;

use mfpmp::fields::{constant_basis, BasisField, ControlField, ControlLaw, CuckerSmale, ZeroKernel};
use mfpmp::functionals::{
    ConstraintIntegrand, MomentMap, RunningCost, RunningIntegrand, StateConstraint, TerminalFunctional,
};
use mfpmp::pmp::{ControlProblem, MultiplierSet};
use mfpmp::{DiscreteMeasure, Matrix, TimeGrid};
use rand::Rng;

/// Minimizes `c^T x` subject to `A x = b`, `x >= 0` (`b >= 0`) with a dense two-phase tableau
/// simplex and Bland's rule. Returns `None` when infeasible.
pub fn dense_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut tab: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |tab: &mut Vec<Vec<f64>>, r: usize, col: usize| {
        let p = tab[r][col];
        tab[r].iter_mut().for_each(|v| *v /= p);
        let pr = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pr).for_each(|(v, p)| *v -= f * p);
            }
        }
    };

    let run = |tab: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            let mut entering = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j] - (0..m).map(|i| cost[basis[i]] * tab[i][j]).sum::<f64>();
                if reduced < -1e-11 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if tab[i][col] > 1e-12 {
                    let ratio = tab[i][width - 1] / tab[i][col];
                    match leave {
                        Some((r, best)) if ratio > best + 1e-14 || (ratio > best - 1e-14 && basis[i] > basis[r]) => {}
                        _ => leave = Some((i, ratio)),
                    }
                }
            }
            let (r, _) = leave.expect("transport LPs are bounded");
            pivot(tab, r, col);
            basis[r] = col;
        }
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut tab, &mut basis, &phase1, n + m);
    let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| tab[i][width - 1]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    for i in 0..m {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| tab[i][j].abs() > 1e-12 && !basis.contains(&j)) {
                pivot(&mut tab, i, col);
                basis[i] = col;
            }
        }
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    run(&mut tab, &mut basis, &phase2, n);
    Some((0..m).map(|i| phase2[basis[i]] * tab[i][width - 1]).sum())
}

/// `W_p^p` between two clouds through `dense_lp`.
pub fn lp_transport_cost(mu: &DiscreteMeasure<f64>, nu: &DiscreteMeasure<f64>, p: i32) -> f64 {
    let (n, m) = (mu.len(), nu.len());
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        let mut r = vec![0.0; n * m];
        (0..m).for_each(|j| r[i * m + j] = 1.0);
        rows.push(r);
        rhs.push(mu.weight(i));
    }
    for j in 0..m {
        let mut r = vec![0.0; n * m];
        (0..n).for_each(|i| r[i * m + j] = 1.0);
        rows.push(r);
        rhs.push(nu.weight(j));
    }
    let cost: Vec<f64> = (0..n)
        .flat_map(|i| {
            (0..m).map(move |j| {
                let d: f64 = mu.point(i).iter().zip(nu.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                d.powi(p)
            })
        })
        .collect();
    dense_lp(&rows, &rhs, &cost).expect("transport polytope is nonempty")
}

pub fn random_cloud<R: Rng>(rng: &mut R, n: usize, d: usize, spread: f64) -> DiscreteMeasure<f64> {
    let pts: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-spread..spread)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    DiscreteMeasure::normalized(d, pts, w).unwrap()
}

pub fn random_joint<R: Rng>(rng: &mut R, a: &[f64], b: &[f64]) -> Matrix<f64> {
    // Iterative proportional fitting from a random positive kernel.
    let (n, m) = (a.len(), b.len());
    let mut g: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.01..1.0)).collect();
    for _ in 0..2000 {
        for i in 0..n {
            let s: f64 = g[i * m..(i + 1) * m].iter().sum();
            g[i * m..(i + 1) * m].iter_mut().for_each(|v| *v *= a[i] / s);
        }
        for j in 0..m {
            let s: f64 = (0..n).map(|i| g[i * m + j]).sum();
            (0..n).for_each(|i| g[i * m + j] *= b[j] / s);
        }
    }
    Matrix::from_row_major(n, m, g)
}

pub fn constant_field(values: &[f64]) -> ControlField<f64> {
    ControlField::new(values.len(), constant_basis(values.len()), values.to_vec()).unwrap()
}

pub struct Scenario {
    pub problem: ControlProblem<f64>,
    pub mu0: DiscreteMeasure<f64>,
    pub law: ControlLaw<f64>,
    pub multipliers: MultiplierSet<f64>,
    pub dictionary: Vec<ControlField<f64>>,
}

/// Single particle from 1 with `L = a^2/2`, `phi = x^2/2`: optimum `a = -1/2`, cost `1/4`, `r = -1/2`.
pub fn lqr(steps: usize) -> Scenario {
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let problem = ControlProblem::new(
        Arc::new(ZeroKernel { dim: 1 }),
        RunningCost::new(RunningIntegrand::Effort, MomentMap::Zero { k: 0 }),
        TerminalFunctional::SeparablePolynomial { coeffs: vec![0.0, 0.0, 0.5], derivative: None },
    );
    Scenario {
        problem,
        mu0: DiscreteMeasure::dirac(&[1.0]),
        law: ControlLaw::constant_in_time(1, constant_basis(1), grid, vec![-0.5], 2.0).unwrap(),
        multipliers: MultiplierSet::normal(0, 0, 0),
        dictionary: [-1.0, -0.5, 0.0, 0.5].iter().map(|&a| constant_field(&[a])).collect(),
    }
}

pub const BETA: f64 = 1.0;
pub const T1: f64 = 0.5;
pub const CAP: f64 = 0.25;

/// Mean position tracks speed `BETA` until `T1` and `-BETA` after, under `∫ x dmu <= CAP`.
/// The optimum moves at `CAP / T1` and then at `-BETA`; the multiplier is an atom of mass
/// `BETA - CAP / T1` at `T1` and the costates vanish when there is no terminal cost.
///
/// With `kappa > 0` the atoms also interact through an odd Cucker–Smale kernel, which leaves
/// the mean untouched, and `variance` adds a terminal spread cost that does not see the mean.
pub fn constrained(steps: usize, atoms: &[f64], kappa: f64, variance: bool) -> Scenario {
    assert!(steps % 2 == 0);
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let half = steps / 2;
    let reference: Vec<Vec<f64>> = (0..steps).map(|c| vec![if c < half { BETA } else { -BETA }]).collect();
    let speed: Vec<Vec<f64>> = (0..steps).map(|c| vec![if c < half { CAP / T1 } else { -BETA }]).collect();
    let terminal = if variance {
        TerminalFunctional::Variance
    } else {
        TerminalFunctional::SeparablePolynomial { coeffs: vec![0.0], derivative: None }
    };
    let kernel: Arc<dyn mfpmp::fields::InteractionKernel<f64>> = if kappa == 0.0 {
        Arc::new(ZeroKernel { dim: 1 })
    } else {
        Arc::new(CuckerSmale { dim: 1, kappa, beta: 1.0 })
    };
    let problem = ControlProblem::new(
        kernel,
        RunningCost::new(RunningIntegrand::Tracking { reference }, MomentMap::Zero { k: 0 }),
        terminal,
    )
    .with_state_constraint(StateConstraint::new(
        ConstraintIntegrand::Affine { a: vec![1.0], c: vec![], b: -CAP, rate: 0.0 },
        MomentMap::Zero { k: 0 },
    ));
    let centre = atoms.iter().sum::<f64>() / atoms.len() as f64;
    let mu0 = DiscreteMeasure::uniform(1, atoms.iter().map(|x| x - centre).collect()).unwrap();
    let mut multipliers = MultiplierSet::normal(0, 0, 1);
    multipliers.state[0].push((T1, BETA - CAP / T1));
    Scenario {
        problem,
        mu0,
        law: ControlLaw::new(1, constant_basis(1), grid, speed, 2.0).unwrap(),
        multipliers,
        dictionary: [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|&a| constant_field(&[a])).collect(),
    }
}

/// Fields `a x + c` in one dimension.
pub fn affine_field(a: f64, c: f64) -> ControlField<f64> {
    let basis = Arc::new(vec![
        BasisField::Constant(vec![1.0]),
        BasisField::Linear { a: Matrix::from_rows(&[vec![1.0]]), b: vec![0.0] },
    ]);
    ControlField::new(1, basis, vec![c, a]).unwrap()
}

pub type ValueFn = Box<dyn Fn(&DiscreteMeasure<f64>) -> mfpmp::Result<f64>>;
pub type GradFn = Box<dyn Fn(&DiscreteMeasure<f64>) -> mfpmp::Result<mfpmp::AtomField<f64>>>;

pub struct GradientCase {
    pub name: String,
    pub value: ValueFn,
    pub gradient: GradFn,
    pub tol: f64,
}

fn case(name: impl Into<String>, tol: f64, value: ValueFn, gradient: GradFn) -> GradientCase {
    GradientCase { name: name.into(), value, gradient, tol }
}

fn sample_matrix(d: usize, seed: f64) -> Matrix<f64> {
    Matrix::from_row_major(d, d, (0..d * d).map(|k| ((k as f64 + 1.0) * seed).sin()).collect())
}

/// A smooth, spatially varying control field used as `omega` in the running-cost and penalization cases.
pub fn tanh_field(d: usize) -> ControlField<f64> {
    let basis = Arc::new(vec![
        BasisField::Tanh { a: sample_matrix(d, 0.9), b: (0..d).map(|k| 0.1 * k as f64 - 0.2).collect() },
        BasisField::Constant(vec![0.3; d]),
    ]);
    ControlField::new(d, basis, vec![0.7, -0.4]).unwrap()
}

pub fn terminal_catalog(d: usize) -> Vec<(String, TerminalFunctional<f64>)> {
    use mfpmp::functionals::Potential;
    let v = |s: f64| (0..d).map(|k| s + 0.25 * k as f64).collect::<Vec<_>>();
    let quartic: mfpmp::functionals::PotentialFn<f64> = Arc::new(|xs: &[&[f64]]| {
        let s: f64 = xs[0].iter().zip(xs[1]).map(|(a, b)| (a - b) * (a - b)).sum();
        0.25 * s * s + xs[0][0] * xs[1][0]
    });
    vec![
        ("affine potential".into(), TerminalFunctional::NBody(Potential::Affine { a: v(0.5), b: 0.1 })),
        ("quadratic potential".into(), TerminalFunctional::NBody(Potential::Quadratic { center: v(-0.3) })),
        ("pair quadratic".into(), TerminalFunctional::NBody(Potential::PairQuadratic)),
        ("pair gaussian".into(), TerminalFunctional::NBody(Potential::PairGaussian { sigma: 0.8 })),
        ("pair cross".into(), TerminalFunctional::NBody(Potential::PairCross { a: sample_matrix(d, 1.7) })),
        ("triple".into(), TerminalFunctional::NBody(Potential::Triple)),
        (
            "custom pair".into(),
            TerminalFunctional::NBody(Potential::Custom { arity: 2, eval: quartic, grad: None }),
        ),
        ("variance".into(), TerminalFunctional::Variance),
        (
            "support distance".into(),
            TerminalFunctional::SupportDistance {
                dim: d,
                targets: (0..3 * d).map(|k| (k as f64 * 2.3).cos() * 1.7).collect(),
            },
        ),
        (
            "separable polynomial".into(),
            TerminalFunctional::SeparablePolynomial { coeffs: vec![0.1, -0.2, 0.3, 0.05], derivative: None },
        ),
        ("shifted variance".into(), TerminalFunctional::Shifted(Box::new(TerminalFunctional::Variance), 2.0)),
    ]
}

pub fn running_catalog(d: usize) -> Vec<(String, RunningCost<f64>)> {
    let v = |s: f64| (0..d).map(|k| s - 0.3 * k as f64).collect::<Vec<_>>();
    let affine = MomentMap::Affine { a: Matrix::from_row_major(1, d, v(0.8)), b: vec![0.2] };
    vec![
        ("effort".into(), RunningCost::new(RunningIntegrand::Effort, MomentMap::Zero { k: 0 })),
        ("tracking".into(), RunningCost::new(RunningIntegrand::Tracking { reference: vec![v(0.4)] }, MomentMap::Zero { k: 0 })),
        ("linear position".into(), RunningCost::new(RunningIntegrand::LinearPosition { a: v(1.1) }, MomentMap::Zero { k: 0 })),
        ("moment linear, squared norm".into(), RunningCost::new(RunningIntegrand::MomentLinear { a: vec![0.7] }, MomentMap::SquaredNorm)),
        ("moment linear, affine".into(), RunningCost::new(RunningIntegrand::MomentLinear { a: vec![-1.3] }, affine)),
        ("attraction".into(), RunningCost::new(RunningIntegrand::Attraction, MomentMap::Identity)),
        ("quadratic position".into(), RunningCost::new(RunningIntegrand::QuadraticPosition { center: v(0.2) }, MomentMap::Zero { k: 0 })),
        (
            "sum".into(),
            RunningCost::new(
                RunningIntegrand::Sum(vec![(0.5, RunningIntegrand::Effort), (2.0, RunningIntegrand::Attraction)]),
                MomentMap::Identity,
            ),
        ),
    ]
}

pub fn constraint_catalog(d: usize) -> Vec<(String, StateConstraint<f64>)> {
    let v = |s: f64| (0..d).map(|k| s + 0.4 * k as f64).collect::<Vec<_>>();
    vec![
        (
            "affine".into(),
            StateConstraint::new(ConstraintIntegrand::Affine { a: v(0.6), c: v(-0.5), b: -1.0, rate: 0.3 }, MomentMap::Identity),
        ),
        (
            "ball".into(),
            StateConstraint::new(ConstraintIntegrand::Ball { center: v(0.1), velocity: v(0.5), radius: 2.0 }, MomentMap::Zero { k: 0 }),
        ),
        (
            "moment quadratic".into(),
            StateConstraint::new(ConstraintIntegrand::MomentQuadratic { target: v(0.3), b: -0.5 }, MomentMap::Identity),
        ),
        ("moment quadratic, squared norm".into(), StateConstraint::new(ConstraintIntegrand::MomentQuadratic { target: vec![1.0], b: -2.0 }, MomentMap::SquaredNorm)),
        ("bilinear".into(), StateConstraint::new(ConstraintIntegrand::Bilinear { s: 0.8 }, MomentMap::Identity)),
        (
            "sum".into(),
            StateConstraint::new(
                ConstraintIntegrand::Sum(vec![
                    (1.0, ConstraintIntegrand::Bilinear { s: -0.4 }),
                    (0.5, ConstraintIntegrand::Ball { center: v(0.0), velocity: v(-0.2), radius: 1.0 }),
                ]),
                MomentMap::Identity,
            ),
        ),
    ]
}

pub fn kernel_catalog(d: usize) -> Vec<(String, Arc<dyn mfpmp::fields::InteractionKernel<f64>>)> {
    vec![
        ("zero".into(), Arc::new(ZeroKernel { dim: d })),
        ("linear attraction".into(), Arc::new(mfpmp::fields::LinearAttraction { dim: d, kappa: 0.7 })),
        ("cucker-smale".into(), Arc::new(CuckerSmale { dim: d, kappa: 1.3, beta: 0.8 })),
    ]
}

/// Every functional with a closed-form Wasserstein gradient, in dimension `d`.
pub fn gradient_cases(d: usize) -> Vec<GradientCase> {
    use mfpmp::pmp::{grad_penalized_constraint, penalized_constraint};
    let t = 0.37;
    let mut out = Vec::new();
    for (name, f) in terminal_catalog(d) {
        let g = f.clone();
        out.push(case(format!("terminal {name}"), 1e-5, Box::new(move |m| f.value(m)), Box::new(move |m| g.gradient(m))));
    }
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let at = grid.instant(t).unwrap();
    for (name, c) in running_catalog(d) {
        let omega = tanh_field(d);
        let (c2, o2) = (c.clone(), omega.clone());
        out.push(case(
            format!("running {name}"),
            1e-5,
            Box::new(move |m| c.value(at, m, &omega)),
            Box::new(move |m| c2.gradient(at, m, &o2)),
        ));
    }
    for (name, c) in constraint_catalog(d) {
        let c2 = c.clone();
        out.push(case(
            format!("state constraint {name}"),
            1e-5,
            Box::new(move |m| Ok(c.prepare(t, m)?.value())),
            Box::new(move |m| Ok(c2.prepare(t, m)?.grad(m))),
        ));
    }
    for (kname, kernel) in kernel_catalog(d) {
        for (name, c) in constraint_catalog(d) {
            let omega = tanh_field(d);
            let cs = vec![c];
            let (k2, cs2, o2) = (Arc::clone(&kernel), cs.clone(), omega.clone());
            let kernel = Arc::clone(&kernel);
            out.push(case(
                format!("penalized {name} under {kname}"),
                1e-4,
                Box::new(move |m| penalized_constraint(kernel.as_ref(), &cs, &[0.6], t, m, &omega)),
                Box::new(move |m| grad_penalized_constraint(k2.as_ref(), &cs2, &[0.6], t, m, &o2)),
            ));
        }
    }
    out
}

/// Runs every case on `clouds` random 10-atom clouds per dimension. Returns failure descriptions
/// and the worst relative error per tolerance class.
pub fn run_gradient_suite(seed: u64, clouds: usize) -> (Vec<String>, usize, f64) {
    use mfpmp::functionals::{chainrule_check, DEFAULT_STEP};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        let cases = gradient_cases(d);
        for _ in 0..clouds {
            let mu = random_cloud(&mut rng, 10, d, 1.5);
            let v = mfpmp::AtomField::from_flat(d, (0..10 * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
            for c in &cases {
                let g = (c.gradient)(&mu).unwrap();
                let analytic = g.pairing(mu.weights(), &v);
                let check = chainrule_check(|m| (c.value)(m), &mu, &v, analytic, DEFAULT_STEP).unwrap();
                checks += 1;
                worst = worst.max(check.rel_error / c.tol);
                if !check.passes(c.tol) {
                    failures.push(format!("{} (d = {d}): {:?}", c.name, check));
                }
            }
        }
    }
    (failures, checks, worst)
}

/// Exact distances against the dense LP on clouds of up to 12 atoms; returns the largest mismatch.
pub fn metric_oracle_mismatch(seed: u64, trials: usize) -> f64 {
    use mfpmp::measures::wasserstein;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let d = 1 + trial % 2;
        let (mu, nu) = if trial % 3 == 0 {
            let n = rng.gen_range(2..=12);
            let a: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            (DiscreteMeasure::uniform(d, a).unwrap(), DiscreteMeasure::uniform(d, b).unwrap())
        } else {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(1..=12);
            (random_cloud(&mut rng, n, d, 2.0), random_cloud(&mut rng, m, d, 2.0))
        };
        let w1 = wasserstein(1, &mu, &nu).unwrap();
        let w2 = wasserstein(2, &mu, &nu).unwrap();
        worst = worst.max((w1 - lp_transport_cost(&mu, &nu, 1)).abs());
        worst = worst.max((w2 * w2 - lp_transport_cost(&mu, &nu, 2)).abs());
    }
    worst
}

/// Worst violation of symmetry, triangle inequality and `W1 <= W2` on random triples.
pub fn metric_axiom_violation(seed: u64, trials: usize) -> f64 {
    use mfpmp::measures::wasserstein;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let d = 1 + trial % 2;
        let c: Vec<_> = (0..3).map(|_| random_cloud(&mut rng, 10, d, 1.5)).collect();
        for p in [1, 2] {
            let w = |a: usize, b: usize| wasserstein(p, &c[a], &c[b]).unwrap();
            let (ab, ba, bc, ac) = (w(0, 1), w(1, 0), w(1, 2), w(0, 2));
            if ab != ba || ab < 0.0 || w(0, 0) != 0.0 {
                worst = f64::INFINITY;
            }
            worst = worst.max(ac - ab - bc);
        }
        worst = worst.max(wasserstein(1, &c[0], &c[1]).unwrap() - wasserstein(2, &c[0], &c[1]).unwrap());
    }
    worst
}

/// Worst `lhs - rhs` of the disintegration bound over random couplings with 5-atom bases.
pub fn disintegration_violation(seed: u64, trials: usize) -> f64 {
    use mfpmp::measures::disintegration_bound_check;
    use mfpmp::Coupling;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let d = 1 + trial % 2;
        let base = random_cloud(&mut rng, 5, d, 1.0);
        let n1 = rng.gen_range(1..=5);
        let n2 = rng.gen_range(1..=5);
        let t1 = random_cloud(&mut rng, n1, d, 2.0);
        let t2 = random_cloud(&mut rng, n2, d, 2.0);
        let g1 = Coupling::new(base.clone(), t1.clone(), random_joint(&mut rng, base.weights(), t1.weights())).unwrap();
        let g2 = Coupling::new(base.clone(), t2.clone(), random_joint(&mut rng, base.weights(), t2.weights())).unwrap();
        let (lhs, rhs) = disintegration_bound_check(&g1, &g2).unwrap();
        worst = worst.max(lhs - rhs);
    }
    worst
}

/// Symmetric two-atom cloud at ±1 under `H = y - x`: the atoms sit at `±e^{-t}`.
pub fn collapse_error(steps: usize) -> f64 {
    use mfpmp::dynamics::solve_forward;
    use mfpmp::fields::LinearAttraction;
    let grid = TimeGrid::new(1.0f64, steps).unwrap();
    let law = ControlLaw::constant_in_time(1, constant_basis(1), grid, vec![0.0], 0.0).unwrap();
    let mu0 = DiscreteMeasure::uniform(1, vec![-1.0, 1.0]).unwrap();
    let traj = solve_forward(&mu0, &LinearAttraction { dim: 1, kappa: 1.0 }, &law, &grid).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        let e = (-grid.time(k)).exp();
        worst = worst.max((traj.position(k, 0)[0] + e).abs()).max((traj.position(k, 1)[0] - e).abs());
    }
    worst
}

/// Observed orders `log2(err(h) / err(h/2))` for 5, 10, 20 and 40 steps.
pub fn collapse_orders() -> Vec<f64> {
    let errs: Vec<f64> = [5, 10, 20, 40].iter().map(|&n| collapse_error(n)).collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Interaction scenario in the plane with a state-dependent control.
pub fn planar_flock(steps: usize) -> (Arc<dyn mfpmp::fields::InteractionKernel<f64>>, ControlLaw<f64>, TimeGrid<f64>) {
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let basis = Arc::new(vec![
        BasisField::Tanh { a: sample_matrix(2, 0.6), b: vec![0.1, -0.3] },
        BasisField::Constant(vec![1.0, 0.0]),
    ]);
    let coeffs = (0..steps).map(|c| vec![0.8, (3.0f64 * grid.time(c)).sin()]).collect();
    let law = ControlLaw::new(2, basis, grid, coeffs, 4.0).unwrap();
    (Arc::new(CuckerSmale { dim: 2, kappa: 1.5, beta: 1.0 }), law, grid)
}

/// Largest per-atom gap between composed and direct forward transport, plus the
/// largest round-trip error forward then backward.
pub fn semigroup_defects(seed: u64) -> (f64, f64) {
    use mfpmp::dynamics::{flow_map, solve_forward};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (kernel, law, grid) = planar_flock(100);
    let mu0 = random_cloud(&mut rng, 8, 2, 1.0);
    let traj = solve_forward(&mu0, kernel.as_ref(), &law, &grid).unwrap();
    let (mut compose, mut round_trip): (f64, f64) = (0.0, 0.0);
    for i in 0..8 {
        let x = mu0.point(i);
        for s in [0, 17, 50, 99] {
            let mid = flow_map(&traj, kernel.as_ref(), &law, 0, s, x).unwrap();
            let two = flow_map(&traj, kernel.as_ref(), &law, s, 100, &mid).unwrap();
            let one = flow_map(&traj, kernel.as_ref(), &law, 0, 100, x).unwrap();
            compose = compose.max(mfpmp::linalg::dist(&two, &one));
        }
        let end = flow_map(&traj, kernel.as_ref(), &law, 0, 100, x).unwrap();
        let back = flow_map(&traj, kernel.as_ref(), &law, 100, 0, &end).unwrap();
        round_trip = round_trip.max(mfpmp::linalg::dist(&back, x));
    }
    (compose, round_trip)
}

/// `W1(mu(T), nu(T)) / W1(mu0, nu0)` on random pairs, with the Grönwall constant
/// `exp((L1 + L2 + Lip u) T)` from the declared bounds.
pub fn stability_ratios(seed: u64, pairs: usize) -> (Vec<f64>, f64) {
    use mfpmp::dynamics::solve_forward;
    use mfpmp::measures::wasserstein;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (kernel, law, grid) = planar_flock(50);
    let mut ratios = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let n = rng.gen_range(3..9);
        let m = rng.gen_range(3..9);
        let mu = random_cloud(&mut rng, n, 2, 1.0);
        let nu = random_cloud(&mut rng, m, 2, 1.0);
        let a = solve_forward(&mu, kernel.as_ref(), &law, &grid).unwrap();
        let b = solve_forward(&nu, kernel.as_ref(), &law, &grid).unwrap();
        let end = wasserstein(1, &a.cloud(50), &b.cloud(50)).unwrap();
        ratios.push(end / wasserstein(1, &mu, &nu).unwrap());
    }
    let kb = kernel.bounds(10.0);
    let lip_u = 0.8 * sample_matrix(2, 0.6).spectral_norm();
    (ratios, ((kb.l1 + kb.l2 + lip_u) * grid.horizon()).exp())
}

/// First-order report for two needles on the planar interaction scenario, over `levels` halvings.
pub fn interaction_needle_report(levels: usize) -> mfpmp::dynamics::FirstOrderReport {
    use mfpmp::dynamics::{solve_forward, verify_first_order, NeedleEntry, NeedlePackage};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let (kernel, law, grid) = planar_flock(160);
    let mu0 = random_cloud(&mut rng, 6, 2, 1.0);
    let traj = solve_forward(&mu0, kernel.as_ref(), &law, &grid).unwrap();
    let w1 = ControlField::new(2, Arc::clone(law.basis()), vec![-0.5, 1.5]).unwrap();
    let w2 = ControlField::new(2, Arc::clone(law.basis()), vec![1.2, -1.0]).unwrap();
    let pkg = NeedlePackage::new(
        vec![NeedleEntry { field: w1, node: 48, cells: 8 }, NeedleEntry { field: w2, node: 112, cells: 8 }],
        &grid,
    )
    .unwrap();
    verify_first_order(&mu0, &traj, kernel.as_ref(), &law, &pkg, levels).unwrap()
}

/// Largest residual of the first-order prediction without interaction and with a constant control.
pub fn free_needle_residual() -> f64 {
    use mfpmp::dynamics::{solve_forward, verify_first_order, NeedleEntry, NeedlePackage};
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let law = ControlLaw::constant_in_time(2, constant_basis(2), grid, vec![0.3, -0.2], 2.0).unwrap();
    let mu0 = DiscreteMeasure::new(2, &[vec![0.0, 1.0], vec![-1.0, 0.5], vec![2.0, 2.0]], vec![0.2, 0.3, 0.5]).unwrap();
    let kernel = ZeroKernel { dim: 2 };
    let traj = solve_forward(&mu0, &kernel, &law, &grid).unwrap();
    let pkg = NeedlePackage::new(
        vec![
            NeedleEntry { field: constant_field(&[1.0, 1.0]), node: 16, cells: 8 },
            NeedleEntry { field: constant_field(&[-2.0, 0.5]), node: 40, cells: 8 },
        ],
        &grid,
    )
    .unwrap();
    let report = verify_first_order(&mu0, &traj, &kernel, &law, &pkg, 4).unwrap();
    report.levels.iter().map(|l| l.residual).fold(0.0, f64::max)
}
