use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use mfpmp::dynamics::{verify_first_order, NeedleEntry, NeedlePackage};
use mfpmp::fields::check_hypotheses_seeded;
use mfpmp::functionals::{chainrule_check, TerminalFunctional, DEFAULT_STEP};
use mfpmp::pmp::{check_certificate, grad_penalized_constraint, penalized_constraint, CertificateOptions};
use mfpmp::{AtomField, DiscreteMeasure, Extremal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::scenario::{kind, Scenario, Setup};

fn write_json(out: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let path = out.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = out.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn simulate(scenario: &Scenario, s: &Setup, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    let traj = s.problem.simulate(&s.mu0, &s.law)?;
    let cost = s.problem.cost(&traj, &s.law)?;
    let mut w = create(out, "trajectory.csv")?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    let max_radius = (0..=s.grid.steps()).map(|k| traj.cloud(k).support_radius()).fold(0.0, f64::max);
    let hypotheses = check_hypotheses_seeded(s.problem.kernel.as_ref(), &s.law, max_radius.max(1.0), 200, s.seed);
    let summary = json!({
        "seed": s.seed,
        "dimension": scenario.dimension,
        "atoms": s.mu0.len(),
        "steps": s.grid.steps(),
        "dt": s.grid.dt(),
        "cost": cost,
        "final_support_radius": traj.cloud(s.grid.steps()).support_radius(),
        "max_support_radius": max_radius,
        "radius_bound": traj.radius_bound(),
        "hypotheses": hypotheses,
    });
    write_json(out, "summary.json", &summary)?;
    println!("cost {cost:e}, support radius {max_radius:e} (bound {:e}), seed {}", traj.radius_bound(), s.seed);
    Ok(true)
}

#[derive(Serialize)]
struct GradRow {
    functional: String,
    checks: usize,
    worst_rel_error: f64,
    tolerance: f64,
    passed: bool,
}

type Eval<'a> = Box<dyn Fn(&DiscreteMeasure<f64>) -> mfpmp::Result<f64> + 'a>;
type Grad<'a> = Box<dyn Fn(&DiscreteMeasure<f64>) -> mfpmp::Result<AtomField<f64>> + 'a>;

fn terminal_case(name: String, tol: f64, f: &TerminalFunctional<f64>) -> (String, f64, Eval<'_>, Grad<'_>) {
    (name, tol, Box::new(move |m| f.value(m)), Box::new(move |m| f.gradient(m)))
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> Result<DiscreteMeasure<f64>> {
    let pts = (0..n * d).map(|_| rng.gen_range(-spread..spread)).collect();
    let w = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    Ok(DiscreteMeasure::normalized(d, pts, w)?)
}

pub fn gradcheck(scenario: &Scenario, s: &Setup, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    let spec = &scenario.checks.gradcheck;
    let p = &s.problem;
    let d = scenario.dimension;
    let mut cases: Vec<(String, f64, Eval, Grad)> = Vec::new();
    let terminal = |name: String, f| terminal_case(name, spec.tolerance, f);
    cases.push(terminal(format!("terminal {}", kind(&scenario.terminal)), &p.terminal));
    for (i, (f, decl)) in p.inequality.iter().zip(&scenario.inequality).enumerate() {
        cases.push(terminal(format!("inequality {i} {}", kind(decl)), f));
    }
    for (i, (f, decl)) in p.equality.iter().zip(&scenario.equality).enumerate() {
        cases.push(terminal(format!("equality {i} {}", kind(decl)), f));
    }
    let t = 0.37 * s.grid.horizon();
    let at = s.grid.instant(t)?;
    let omega = s.law.field(at.cell);
    if let Some(decl) = &scenario.running {
        let (c, o) = (&p.running, omega.clone());
        let o2 = omega.clone();
        cases.push((
            format!("running {} at t = {t}", kind(&decl.integrand)),
            spec.tolerance,
            Box::new(move |m| c.value(at, m, &o)),
            Box::new(move |m| c.gradient(at, m, &o2)),
        ));
    }
    for (l, (c, decl)) in p.state.iter().zip(&scenario.state_constraints).enumerate() {
        cases.push((
            format!("state constraint {l} {} at t = {t}", kind(&decl.integrand)),
            spec.tolerance,
            Box::new(move |m| Ok(c.prepare(t, m)?.value())),
            Box::new(move |m| Ok(c.prepare(t, m)?.grad(m))),
        ));
    }
    if !p.state.is_empty() {
        let zeta = vec![1.0; p.state.len()];
        let (k, cs) = (p.kernel.as_ref(), &p.state);
        let (z1, z2, o1, o2) = (zeta.clone(), zeta, omega.clone(), omega);
        cases.push((
            format!("penalized constraints at t = {t}"),
            spec.tolerance,
            Box::new(move |m| penalized_constraint(k, cs, &z1, t, m, &o1)),
            Box::new(move |m| grad_penalized_constraint(k, cs, &z2, t, m, &o2)),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let spread = s.mu0.support_radius().max(1.0);
    let mut worst = vec![0.0f64; cases.len()];
    for _ in 0..spec.clouds {
        let mu = random_cloud(&mut rng, spec.atoms, d, spread)?;
        let v = AtomField::from_flat(d, (0..spec.atoms * d).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for (w, (name, _, value, grad)) in worst.iter_mut().zip(&cases) {
            let analytic = grad(&mu).with_context(|| format!("gradient of {name}"))?.pairing(mu.weights(), &v);
            let check = chainrule_check(value, &mu, &v, analytic, DEFAULT_STEP).with_context(|| format!("oracle on {name}"))?;
            *w = w.max(check.rel_error);
        }
    }
    let rows: Vec<GradRow> = cases
        .iter()
        .zip(&worst)
        .map(|((name, tol, ..), &e)| GradRow {
            functional: name.clone(),
            checks: spec.clouds,
            worst_rel_error: e,
            tolerance: *tol,
            passed: e <= *tol,
        })
        .collect();
    println!("{:<40} {:>7} {:>12} {:>10}  status", "functional", "checks", "rel error", "tolerance");
    for r in &rows {
        let status = if r.passed { "ok" } else { "FAIL" };
        println!("{:<40} {:>7} {:>12.3e} {:>10.1e}  {status}", r.functional, r.checks, r.worst_rel_error, r.tolerance);
    }
    let passed = rows.iter().all(|r| r.passed);
    for r in rows.iter().filter(|r| !r.passed) {
        eprintln!("gradient mismatch: {} (relative error {:e} > {:e})", r.functional, r.worst_rel_error, r.tolerance);
    }
    write_json(out, "gradcheck.json", &json!({ "seed": s.seed, "passed": passed, "functionals": rows }))?;
    Ok(passed)
}

pub fn pmp_check(scenario: &Scenario, s: &Setup, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    let spec = &scenario.checks.pmp;
    let mut ext = Extremal::solve(&s.problem, &s.mu0, &s.law, s.multipliers.clone())?;
    if spec.flip_costate {
        let flipped = ext.costate.negated();
        ext = Extremal::from_parts(&s.problem, &s.law, ext.trajectory.clone(), flipped, s.multipliers.clone())?;
    }
    let k_nodes = spec
        .k_times
        .as_ref()
        .map(|ts| {
            ts.iter()
                .map(|&t| s.grid.node_of(t).ok_or_else(|| anyhow!("K time {t} is not a grid node")))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let options = CertificateOptions { k_constancy: spec.k_constancy, k_nodes, ..CertificateOptions::default() };
    let report = check_certificate(&ext, &s.dictionary, &options)?;
    let mut w = create(out, "costate.csv")?;
    ext.costate.write_csv(&mut w)?;
    w.flush()?;
    write_json(out, "report.json", &json!({ "seed": s.seed, "flip_costate": spec.flip_costate, "report": report }))?;
    println!(
        "max gap {:e}, terminal residual {:e}, {} K tables, {} violations",
        report.max_gap,
        report.terminal_residual,
        report.k_tables.len(),
        report.violations.len()
    );
    for v in &report.violations {
        let at = v.node.map(|k| format!(" at node {k}")).unwrap_or_default();
        eprintln!("{:?}{at}: {}", v.category, v.detail);
    }
    println!("certificate {}", if report.passed { "passed" } else { "failed" });
    Ok(report.passed)
}

pub fn needle_check(scenario: &Scenario, s: &Setup, out: &Path) -> Result<bool> {
    fs::create_dir_all(out)?;
    let spec = scenario.checks.needle.as_ref().ok_or_else(|| anyhow!("scenario has no `checks.needle` section"))?;
    let entries = spec
        .needles
        .iter()
        .map(|n| {
            let node = s.grid.node_of(n.time).ok_or_else(|| anyhow!("needle time {} is not a grid node", n.time))?;
            let field = mfpmp::fields::ControlField::new(scenario.dimension, std::sync::Arc::clone(s.law.basis()), n.coefficients.clone())?;
            Ok(NeedleEntry::from_length(field, node, n.length, &s.grid)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let pkg = NeedlePackage::new(entries, &s.grid)?;
    let traj = s.problem.simulate(&s.mu0, &s.law)?;
    let report = verify_first_order(&s.mu0, &traj, s.problem.kernel.as_ref(), &s.law, &pkg, spec.levels)?;
    let last = report.levels.last().map_or(0.0, |l| l.ratio);
    let small_enough = spec.max_final_ratio.map_or(true, |r| last <= r);
    let passed = report.monotone && small_enough;
    println!("{:>12} {:>12} {:>12}", "|e|", "residual", "ratio");
    for l in &report.levels {
        println!("{:>12.4e} {:>12.4e} {:>12.4e}", l.norm, l.residual, l.ratio);
    }
    if !report.monotone {
        eprintln!("residual ratio does not decrease monotonically");
    }
    if !small_enough {
        eprintln!("final ratio {last:e} above the declared bound");
    }
    write_json(out, "needle.json", &json!({ "seed": s.seed, "passed": passed, "report": report }))?;
    Ok(passed)
}
