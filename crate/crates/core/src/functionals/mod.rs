//! Cost and constraint functionals with closed-form Wasserstein gradients.

mod constraint;
mod moments;
mod oracle;
mod running;
mod terminal;

pub use constraint::{
    eval_constraint, gamma_of_grad, grad_constraint, space_jacobian_of_grad, time_partial, time_partial_of_grad,
    ConstraintFn, ConstraintIntegrand, ConstraintPartials, PreparedConstraint, StateConstraint,
};
pub use moments::MomentMap;
pub use oracle::{chainrule_check, chainrule_fd_oracle, ChainruleCheck, DEFAULT_STEP};
pub use running::{eval_running, grad_running, IntegrandFn, IntegrandPartials, RunningCost, RunningIntegrand};
pub use terminal::{
    eval_terminal, grad_terminal, Potential, PotentialFn, PotentialGradFn, TerminalFunctional, TUPLE_CAP,
};
