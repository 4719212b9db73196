//! Particle toolkit for constrained optimal control of non-local continuity equations.
//!
//! Measures are weighted clouds of atoms. The crate simulates the controlled
//! mean-field dynamics, computes Wasserstein gradients of costs and constraints,
//! integrates the state/costate system backwards and checks maximum principle
//! certificates on a uniform time grid.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod linalg;
pub mod measures;
pub mod pmp;
pub mod scalar;
pub mod time;

pub use error::{Error, Result};
pub use linalg::{AtomField, Matrix};
pub use measures::{Coupling, DiscreteMeasure};
pub use scalar::Real;
pub use pmp::{ControlProblem, Extremal, MultiplierSet};
pub use time::{Instant, TimeGrid};

pub type Measure64 = DiscreteMeasure<f64>;
pub type Measure32 = DiscreteMeasure<f32>;
pub type Coupling64 = Coupling<f64>;
