//! Non-local velocity fields, admissible controls and their derivatives.

mod control;
mod hypotheses;
mod kernel;

pub use control::{constant_basis, BasisField, ControlField, ControlLaw};
pub use hypotheses::{check_hypotheses, check_hypotheses_seeded, ControlCheck, HypothesisReport, KernelCheck};
pub use kernel::{
    eval_gamma, eval_velocity, eval_velocity_jacobian, CuckerSmale, FnKernel, InteractionKernel, KernelBounds,
    KernelFn, LinearAttraction, ZeroKernel,
};

pub(crate) use kernel::{cloud_velocity, cloud_velocity_jacobian};
