//! Finite-volume simulation and a priori bound diagnostics for the
//! crime-hotspot taxis system
//!
//! ```text
//! u_t = Δu − χ∇·(η_ε(u) (u/v) ∇v) − uv + ρu − μu^{2+γ}
//! v_t = Δv − v + uv
//! ```
//!
//! on a rectangle with homogeneous Neumann boundary conditions.
//!
//! The crate is `no_std` (it needs `alloc`). All transcendental functions go
//! through `libm`, so results are bit-identical across targets and do not
//! depend on the platform's `std` math library.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod stepper;
pub mod weakform;

pub use diagnostics::{DiagnosticsConfig, DiagnosticsRecord, Slack, Verdict};
pub use error::{Error, Result};
pub use grid::{Field, Grid, VectorField};
pub use model::{BoundConstants, Parameters};
pub use stepper::{BlowupKind, BlowupStatus, Coupling, State, StepControl, Thresholds};
pub use weakform::{TestFunction, Trajectory};
