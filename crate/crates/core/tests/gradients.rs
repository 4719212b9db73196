mod common;

use common::*;
use mfpmp::functionals::{Potential, TerminalFunctional};
use mfpmp::measures::wasserstein;
use mfpmp::DiscreteMeasure;
use proptest::prelude::*;
use rand::SeedableRng;

#[test]
fn closed_form_gradients_match_the_oracle() {
    let (failures, checks, _) = run_gradient_suite(7, 20);
    assert!(checks > 1000);
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn wrong_declared_derivative_is_caught() {
    let bad = TerminalFunctional::SeparablePolynomial { coeffs: vec![0.0, 0.0, 1.0], derivative: Some(vec![0.0, 3.0]) };
    let mu = DiscreteMeasure::uniform(1, vec![0.5, -1.0, 2.0]).unwrap();
    let v = mfpmp::AtomField::from_flat(1, vec![1.0, 0.5, -0.25]);
    let g = bad.gradient(&mu).unwrap();
    let check =
        mfpmp::functionals::chainrule_check(|m| bad.value(m), &mu, &v, g.pairing(mu.weights(), &v), 1e-4).unwrap();
    assert!(!check.passes(1e-5));
}

#[test]
fn pair_gradient_equals_brute_force_integral() {
    let w = Potential::PairGaussian { sigma: 0.7 };
    let f = TerminalFunctional::NBody(w.clone());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for n in 1..=6 {
        let mu = random_cloud(&mut rng, n, 2, 1.0);
        let g = f.gradient(&mu).unwrap();
        for i in 0..n {
            let x = mu.point(i);
            let mut expected = vec![0.0; 2];
            for j in 0..n {
                let y = mu.point(j);
                let a = w.grad(&[x, y], 0);
                let b = w.grad(&[y, x], 1);
                for k in 0..2 {
                    expected[k] += mu.weight(j) * (a[k] + b[k]);
                }
            }
            for k in 0..2 {
                assert!((g.at(i)[k] - expected[k]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn functionals_are_lipschitz_in_w2() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for (name, f) in terminal_catalog(2) {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let mu = random_cloud(&mut rng, 6, 2, 1.0);
            let nu = random_cloud(&mut rng, 6, 2, 1.0);
            let gap = (f.value(&mu).unwrap() - f.value(&nu).unwrap()).abs();
            worst = worst.max(gap / wasserstein(2, &mu, &nu).unwrap());
        }
        assert!(worst.is_finite() && worst < 50.0, "{name}: {worst}");
    }
}

proptest! {
    #[test]
    fn variance_gradient_is_centred_position(pts in prop::collection::vec(-5.0f64..5.0, 2..20)) {
        let mu = DiscreteMeasure::uniform(2, pts[..pts.len() / 2 * 2].to_vec()).unwrap();
        let g = TerminalFunctional::Variance.gradient(&mu).unwrap();
        let mean = mu.mean();
        for i in 0..mu.len() {
            for k in 0..2 {
                prop_assert_eq!(g.at(i)[k], mu.point(i)[k] - mean[k]);
            }
        }
    }
}
