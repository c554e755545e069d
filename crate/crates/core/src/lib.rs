//! Numerics for the parafermionic observable of radial SLE and its
//! self-avoiding-walk ancestor on the hexagonal lattice.
//!
//! The crate is split along the objects it simulates:
//!
//! * [`loewner_flow`]: forward radial Loewner flow, curve tracing, winding.
//! * [`reverse_flow`]: the lifted reverse flow `Z_t = Θ_t + iR_t`, the limit
//!   `T∞` and the time change in which `R` grows linearly.
//! * [`observable`]: exponent algebra, disk automorphisms, total mass and the
//!   Monte Carlo estimator of `F(0)`.
//! * [`bounds`]: the analytic lower-bound machinery (β search, variance
//!   ceilings, admissible region, conformal range roots).
//! * [`discrete`]: exact enumeration of the discrete observable.
//!
//! [`verify`] bundles the end-to-end checks used by the acceptance suite and
//! the `verify` command of the CLI.

// `!(x > 0.0)` is how NaN gets rejected along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod discrete;
mod error;
pub mod integrate;
pub mod loewner_flow;
pub mod mc;
pub mod observable;
pub mod reverse_flow;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
