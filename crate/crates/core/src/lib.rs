//! Monotone solvers and verifiers for degenerate complex Monge-Ampère
//! equations `(ω + dd^c u)^n = e^{εu} μ` on a flat torus or a box.
//!
//! The operator is discretized in Bellman form: `det(ω + u_{z z̄})^{1/n}`
//! is the minimum over a finite set of weighted orthonormal frames of
//! weighted sums of directional complex second differences. The scheme is
//! monotone, so discrete comparison holds and sub/supersolutions can be
//! certified pointwise.

pub mod config;
pub mod envelopes;
pub mod error;
pub mod grid;
pub mod gridio;
pub mod hermitian;
mod linalg;
pub mod operator;
pub mod run;
pub mod solvers;
pub mod verify;

pub use error::{CmaError, Result};
