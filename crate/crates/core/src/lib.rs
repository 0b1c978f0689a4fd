//! Numerical laboratory for discrete coagulation-fragmentation equations
//! with size-dependent diffusion.
//!
//! The crate simulates size-truncated systems
//!
//! ```text
//! ∂t c_i − d_i ∂xx c_i = Q_i[c] + F_i[c]      on (0, L), i = 1..N
//! ∂x c_i = 0                                  at x = 0, L
//! ```
//!
//! and checks a-priori estimates on the resulting trajectories: mass
//! conservation, the duality bound on ‖ρ‖ in L²(Ω_T), L¹ bounds on the
//! individual reaction terms, and propagation of superlinear moments built
//! from slowly diverging weight sequences.
//!
//! Module map:
//! - [`kernels`]: coefficient families and their structural checks.
//! - [`sequences`]: constructive weight sequences (ξ, ψ, λ).
//! - [`rhs`]: reaction right-hand sides and weak-form identities.
//! - [`pde`]: finite-volume grid, Strang splitting, trajectory recording.
//! - [`analysis`]: bound reports computed from trajectories.

// NaN must fail the validity checks, hence `!(x >= 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod kernels;
pub mod pde;
pub mod report;
pub mod rhs;
pub mod sequences;
pub mod sum;

pub use error::{Error, Result};
pub use report::{BoundReport, Status};
