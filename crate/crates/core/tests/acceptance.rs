//! One line per acceptance criterion; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use common::*;
use mfpmp::pmp::{check_certificate, CertificateOptions, Extremal, ViolationCategory};

/// Frozen regression constant for `max K - min K <= C dt` on the interacting constrained scenario.
const K_CONSTANCY_C: f64 = 2e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed <= budget;
    println!(
        "criterion {id} [{}] {name}: {} ({:.2}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn gradients() -> Outcome {
    let (failures, checks, worst) = run_gradient_suite(7, 20);
    Outcome {
        pass: failures.is_empty(),
        detail: format!("{checks} checks, {} failures, worst error/tolerance {worst:.2e}", failures.len()),
    }
}

fn metrics() -> Outcome {
    let lp = metric_oracle_mismatch(1, 60);
    let axioms = metric_axiom_violation(2, 30);
    let dis = disintegration_violation(3, 100);
    Outcome {
        pass: lp <= 1e-9 && axioms <= 1e-9 && dis <= 1e-9,
        detail: format!("LP mismatch {lp:.1e}, axiom violation {axioms:.1e}, disintegration lhs-rhs {dis:.1e}"),
    }
}

fn flow() -> Outcome {
    let collapse = collapse_error(1000);
    let orders = collapse_orders();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let (compose, _) = semigroup_defects(5);
    let (ratios, bound) = stability_ratios(9, 20);
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Outcome {
        pass: collapse <= 1e-6 && min_order >= 3.5 && compose <= 1e-8 && worst.is_finite() && worst <= bound,
        detail: format!(
            "collapse error {collapse:.1e}, order {min_order:.2}, semigroup {compose:.1e}, stability L {worst:.3} (bound {bound:.2})"
        ),
    }
}

fn needles() -> Outcome {
    let report = interaction_needle_report(4);
    let ratios: Vec<String> = report.levels.iter().map(|l| format!("{:.2e}", l.ratio)).collect();
    let free = free_needle_residual();
    Outcome {
        pass: report.monotone && free <= 1e-9,
        detail: format!("ratios [{}], no-dynamics residual {free:.1e}", ratios.join(", ")),
    }
}

fn lqr_reduction() -> Outcome {
    let s = lqr(100);
    let ext = Extremal::solve(&s.problem, &s.mu0, &s.law, s.multipliers.clone()).unwrap();
    let cost = s.problem.cost(&ext.trajectory, &s.law).unwrap();
    let costate_err = (0..=100).map(|k| (ext.costate.costate(k, 0)[0] + 0.5).abs()).fold(0.0, f64::max);
    let report = check_certificate(&ext, &s.dictionary, &CertificateOptions::default()).unwrap();
    let winner = report.nodes.iter().all(|n| n.best_index == 1 && n.gap <= 1e-6);
    Outcome {
        pass: (cost - 0.25).abs() <= 1e-9 && costate_err <= 1e-9 && winner && report.passed,
        detail: format!("cost {cost}, costate error {costate_err:.1e}, max gap {:.1e}, a* wins: {winner}", report.max_gap),
    }
}

fn k_functions() -> Outcome {
    let s = lqr(100);
    let dt = 0.01;
    let ext = Extremal::solve(&s.problem, &s.mu0, &s.law, s.multipliers.clone()).unwrap();
    let zero = constant_field(&[0.0]);
    let (mut spread, mut off): (f64, f64) = (0.0, 0.0);
    for tau in 0..=100 {
        let k = ext.k_path(&zero, tau).unwrap();
        spread = spread.max(k.spread());
        off = off.max(k.values.iter().map(|v| (v + 0.125).abs()).fold(0.0, f64::max));
    }
    let lqr_ok = spread <= 2.0 * dt && off <= 1e-3;

    let steps = 40;
    let c = constrained(steps, &[-0.9, -0.4, 0.1, 0.3, 0.8, 1.2], 2.0, true);
    let ext = Extremal::solve(&c.problem, &c.mu0, &c.law, c.multipliers.clone()).unwrap();
    let bound = K_CONSTANCY_C / steps as f64;
    let probes = [affine_field(1.0, 0.0), affine_field(-0.5, 0.3), affine_field(2.0, -1.0)];
    let (mut c_spread, mut c_terminal): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for tau in [1, 10, 20, 21, 30, 40] {
        for w in &c.dictionary {
            let k = ext.k_path(w, tau).unwrap();
            c_spread = c_spread.max(k.spread());
            c_terminal = c_terminal.max(k.terminal());
        }
        for w in &probes {
            c_spread = c_spread.max(ext.k_path(w, tau).unwrap().spread());
        }
    }
    let options = CertificateOptions { k_constancy: Some(K_CONSTANCY_C), ..CertificateOptions::default() };
    let certified = check_certificate(&ext, &c.dictionary, &options).unwrap().passed;
    let constrained_ok = c_spread <= bound && c_terminal <= 1e-8 && certified;
    Outcome {
        pass: lqr_ok && constrained_ok,
        detail: format!(
            "LQR spread {spread:.1e}, |K+0.125| {off:.1e}; constrained spread {c_spread:.1e} <= {bound:.1e}, max K(T) {c_terminal:.2e}"
        ),
    }
}

fn negative_certificates() -> Outcome {
    let opts = CertificateOptions::default();
    let s = lqr(50);
    let ext = Extremal::solve(&s.problem, &s.mu0, &s.law, s.multipliers.clone()).unwrap();
    let flipped =
        Extremal::from_parts(&s.problem, &s.law, ext.trajectory.clone(), ext.costate.negated(), s.multipliers.clone())
            .unwrap();
    let r = check_certificate(&flipped, &s.dictionary, &opts).unwrap();
    let flip_ok = !r.passed && r.has(ViolationCategory::Maximization);

    let mut zero = s.multipliers.clone();
    zero.lambda0 = 0.0;
    let ext0 = Extremal::solve(&s.problem, &s.mu0, &s.law, zero).unwrap();
    let r = check_certificate(&ext0, &s.dictionary, &opts).unwrap();
    let zero_ok = !r.passed && r.has(ViolationCategory::NonDegeneracy);

    let c = constrained(20, &[0.0], 0.0, false);
    let mut m = c.multipliers.clone();
    m.state[0].push((0.2, 0.1));
    let ext = Extremal::solve(&c.problem, &c.mu0, &c.law, m).unwrap();
    let r = check_certificate(&ext, &c.dictionary, &opts).unwrap();
    let slack_ok = !r.passed && r.has(ViolationCategory::Slackness);
    Outcome {
        pass: flip_ok && zero_ok && slack_ok,
        detail: format!("flipped costate: {flip_ok}, zero multipliers: {zero_ok}, inactive support: {slack_ok}"),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "chain-rule gradients", secs(10), gradients),
        run(2, "exact metrics", secs(30), metrics),
        run(3, "characteristic flow", secs(30), flow),
        run(4, "needle first order", secs(60), needles),
        run(5, "LQR reduction", secs(5), lqr_reduction),
        run(6, "K functions", secs(60), k_functions),
        run(7, "certificate negatives", secs(10), negative_certificates),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
