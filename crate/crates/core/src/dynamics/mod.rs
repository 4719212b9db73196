//! Characteristics of the controlled non-local continuity equation and their linearizations.

mod forward;
mod linearized;
mod needle;

pub use forward::{flow_map, solve_forward, TrajectorySolution};
pub use linearized::{solve_linearized_classical, solve_linearized_nonlocal, solve_needle_linearization, NonlocalLinearization};
pub use needle::{apply_needle, verify_first_order, FirstOrderLevel, FirstOrderReport, NeedleEntry, NeedlePackage};

pub(crate) use forward::{point_jacobian, rk4};
