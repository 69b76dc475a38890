//! Simulation kernel for open quantum systems under photodetection feedback.
//!
//! Three mutually validating engines are provided:
//!
//! * [`liouville`] — the feedback master equation
//!   ρ̇ = −i[H,ρ] + e^{−iZ} c ρ c† e^{iZ} − ½{c†c, ρ}
//!   built as a dense superoperator, integrated with RK4, with steady-state
//!   and Heisenberg-picture (adjoint) forms;
//! * [`trajectory`] — the quantum-jump unraveling, including delayed
//!   feedback (detect with c, wait τ, apply e^{−iZ});
//! * [`collision`] — a first-principles time-bin discretization of the
//!   1-D field, used as a brute-force oracle for the other two.
//!
//! The crate is `no_std` (alloc required); all IO lives in the companion
//! CLI crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod collision;
pub mod error;
pub mod linalg;
pub mod liouville;
pub mod model;
pub mod trajectory;

pub use error::Error;
pub use linalg::{Complex64, DensityMatrix, Operator, StateVector};
pub use model::{FeedbackConfig, IntegrationConfig, SystemModel};
pub use liouville::Superoperator;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
