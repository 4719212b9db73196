//! State/costate system, Hamiltonian, needle functions and maximum principle certificates.

mod certificate;
mod costate;
mod hamiltonian;
mod multipliers;
mod penalization;
mod problem;

pub use certificate::{check_certificate, CertificateOptions, CertificateReport, KTable, NodeCheck, Violation, ViolationCategory};
pub use costate::{solve_costate_backward, StateCostatePath};
pub use hamiltonian::{hamiltonian, Extremal, KPath};
pub use multipliers::{lumped_density, zeta_from_measure, MultiplierSet, ZetaPath};
pub use penalization::{grad_penalized_constraint, penalized_constraint};
pub use problem::ControlProblem;
