use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::ControlField;
use crate::scalar::Real;

use super::hamiltonian::Extremal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationCategory {
    Maximization,
    NonDegeneracy,
    Slackness,
    TerminalCondition,
    KSign,
    KConstancy,
    Feasibility,
    MultiplierDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub category: ViolationCategory,
    pub node: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateOptions {
    /// Relative tolerance of the maximization gap: `gap <= rel * (1 + |H*|)`.
    pub maximization_rel: f64,
    /// Absolute tolerance for `|lambda_i Psi_i|`.
    pub slackness: f64,
    /// `Lambda(t) < -inactive` counts as inactive for the measure multipliers.
    pub inactive: f64,
    pub terminal: f64,
    pub feasibility: f64,
    /// Upper bound for `K(T)`.
    pub k_sign: f64,
    /// When set, require `max K - min K <= c * dt` on each table.
    pub k_constancy: Option<f64>,
    /// Needle base nodes for the K tables. `None` picks a few spread over the horizon.
    pub k_nodes: Option<Vec<usize>>,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            maximization_rel: 1e-6,
            slackness: 1e-6,
            inactive: 1e-6,
            terminal: 1e-10,
            feasibility: 1e-6,
            k_sign: 1e-8,
            k_constancy: None,
            k_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeCheck {
    pub node: usize,
    pub t: f64,
    pub h_star: f64,
    pub best: f64,
    pub best_index: usize,
    pub gap: f64,
    pub tolerance: f64,
    /// A measure multiplier has an atom here, so `zeta` jumps at this node.
    pub multiplier_atom: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KTable {
    pub dictionary_index: usize,
    pub tau: usize,
    pub values: Vec<f64>,
    pub spread: f64,
    pub terminal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub nodes: Vec<NodeCheck>,
    pub max_gap: f64,
    /// `|lambda_i Psi_i(mu(T))|`.
    pub slackness: Vec<f64>,
    /// Mass of each measure multiplier on nodes where its constraint is inactive.
    pub inactive_mass: Vec<f64>,
    pub nondegenerate: bool,
    /// `max_i |r_i(T) + ∇S(x_i(T))|`.
    pub terminal_residual: f64,
    pub inequality_values: Vec<f64>,
    pub equality_values: Vec<f64>,
    /// `max_k Lambda_l(t_k, mu(t_k))`.
    pub state_constraint_max: Vec<f64>,
    pub k_tables: Vec<KTable>,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl CertificateReport {
    pub fn has(&self, category: ViolationCategory) -> bool {
        self.violations.iter().any(|v| v.category == category)
    }
}

fn default_k_nodes(steps: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = [1, steps / 4, steps / 2, (3 * steps) / 4, steps].iter().map(|&k| k.clamp(1, steps)).collect();
    nodes.dedup();
    nodes
}

/// Checks the first-order conditions of an extremal against a finite dictionary of competitor fields.
pub fn check_certificate<T: Real>(
    ext: &Extremal<'_, T>,
    dictionary: &[ControlField<T>],
    options: &CertificateOptions,
) -> Result<CertificateReport> {
    if dictionary.is_empty() {
        return Err(Error::InvalidParameter("the competitor dictionary is empty".into()));
    }
    let grid = *ext.trajectory.grid();
    let steps = grid.steps();
    let problem = ext.problem;
    let m = &ext.multipliers;
    let mut violations = Vec::new();
    let mut flag = |category, node, detail: String| violations.push(Violation { category, node, detail });

    for issue in m.domain_issues() {
        flag(ViolationCategory::MultiplierDomain, None, issue);
    }
    let nondegenerate = m.is_nondegenerate();
    if !nondegenerate {
        flag(ViolationCategory::NonDegeneracy, None, "all multipliers vanish".into());
    }

    let mut nodes = Vec::with_capacity(steps + 1);
    let mut max_gap = f64::NEG_INFINITY;
    for k in 0..=steps {
        let zeta = ext.zeta_left(k);
        let h_star = ext.hamiltonian_with(k, &zeta, &ext.control_at_node(k))?.as_f64();
        let mut best = f64::NEG_INFINITY;
        let mut best_index = 0;
        for (j, omega) in dictionary.iter().enumerate() {
            let h = ext.hamiltonian_with(k, &zeta, omega)?.as_f64();
            if h > best {
                best = h;
                best_index = j;
            }
        }
        let gap = best - h_star;
        let tolerance = options.maximization_rel * (1.0 + h_star.abs());
        if !(gap <= tolerance) {
            flag(
                ViolationCategory::Maximization,
                Some(k),
                format!("competitor {best_index} beats the control by {gap:e} (tolerance {tolerance:e})"),
            );
        }
        max_gap = max_gap.max(gap);
        let multiplier_atom = ext.zeta().iter().any(|z| z.mass_at(k) != T::zero());
        nodes.push(NodeCheck { node: k, t: grid.time(k).as_f64(), h_star, best, best_index, gap, tolerance, multiplier_atom });
    }

    let mu_t = ext.trajectory.cloud(steps);
    let inequality_values: Vec<f64> =
        problem.inequality.iter().map(|f| Ok(f.value(&mu_t)?.as_f64())).collect::<Result<_>>()?;
    let equality_values: Vec<f64> = problem.equality.iter().map(|f| Ok(f.value(&mu_t)?.as_f64())).collect::<Result<_>>()?;
    for (i, &v) in inequality_values.iter().enumerate() {
        if v > options.feasibility {
            flag(ViolationCategory::Feasibility, None, format!("terminal inequality {i} = {v:e}"));
        }
    }
    for (i, &v) in equality_values.iter().enumerate() {
        if v.abs() > options.feasibility {
            flag(ViolationCategory::Feasibility, None, format!("terminal equality {i} = {v:e}"));
        }
    }

    let slackness: Vec<f64> =
        m.inequality.iter().zip(&inequality_values).map(|(&l, &v)| (l.as_f64() * v).abs()).collect();
    for (i, &s) in slackness.iter().enumerate() {
        if s > options.slackness {
            flag(ViolationCategory::Slackness, None, format!("lambda_{i} Psi_{i} = {s:e}"));
        }
    }

    let path_values = problem.state_constraint_values(&ext.trajectory)?;
    let mut state_constraint_max = Vec::with_capacity(path_values.len());
    let mut inactive_mass = Vec::with_capacity(path_values.len());
    for (l, values) in path_values.iter().enumerate() {
        let worst = values.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
        if worst > options.feasibility {
            flag(ViolationCategory::Feasibility, None, format!("state constraint {l} reaches {worst:e}"));
        }
        state_constraint_max.push(worst);
        let z = &ext.zeta()[l];
        let mass: f64 =
            (0..=steps).filter(|&k| values[k].as_f64() < -options.inactive).map(|k| z.mass_at(k).as_f64()).sum();
        if mass > 0.0 {
            flag(ViolationCategory::Slackness, None, format!("multiplier {l} puts mass {mass:e} where the constraint is inactive"));
        }
        inactive_mass.push(mass);
    }

    let mut expected = problem.final_gradient(&mu_t, m)?;
    expected.scale(-T::one());
    let terminal_residual = ext.costate.costate_field(steps).max_dist(&expected).as_f64();
    if !(terminal_residual <= options.terminal) {
        flag(ViolationCategory::TerminalCondition, None, format!("|r(T) + ∇S| = {terminal_residual:e}"));
    }

    let k_nodes = options.k_nodes.clone().unwrap_or_else(|| default_k_nodes(steps));
    let mut k_tables = Vec::new();
    for &tau in &k_nodes {
        for (j, omega) in dictionary.iter().enumerate() {
            let path = ext.k_path(omega, tau)?;
            let table = KTable {
                dictionary_index: j,
                tau,
                values: path.values.iter().map(|v| v.as_f64()).collect(),
                spread: path.spread().as_f64(),
                terminal: path.terminal().as_f64(),
            };
            if !(table.terminal <= options.k_sign) {
                flag(ViolationCategory::KSign, Some(tau), format!("K(T) = {:e} for competitor {j}", table.terminal));
            }
            if let Some(c) = options.k_constancy {
                let bound = c * grid.dt().as_f64();
                if !(table.spread <= bound) {
                    flag(
                        ViolationCategory::KConstancy,
                        Some(tau),
                        format!("K varies by {:e} > {bound:e} for competitor {j}", table.spread),
                    );
                }
            }
            k_tables.push(table);
        }
    }

    let passed = violations.is_empty();
    Ok(CertificateReport {
        nodes,
        max_gap,
        slackness,
        inactive_mass,
        nondegenerate,
        terminal_residual,
        inequality_values,
        equality_values,
        state_constraint_max,
        k_tables,
        violations,
        passed,
    })
}
