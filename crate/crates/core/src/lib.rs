//! Proximal iteratively reweighted ℓ1 (PIRL1) solver for
//!
//! ```text
//! minimize  f(x) + λ Σ |x_i|^p,   0 < p < 1,
//! ```
//!
//! where `f` is smooth with a Lipschitz gradient, together with a set of
//! diagnostics that replay a finished solver trajectory and measure the
//! quantities that govern its convergence: sufficient descent, support and
//! sign stabilization, magnitude lower bounds on the nonzeros, gradient
//! bounds in the `(x, δ = √ε)` parameterization, and the empirical local rate.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod losses;
pub mod prox;
pub mod solver;
pub mod synth;
pub mod types;

pub use diagnostics::{diagnose, DiagnosticsReport};
pub use error::{Error, Result};
pub use losses::{LossKind, SmoothLoss};
pub use solver::{run, Weights};
pub use types::{Eps0, LpProblem, Schedule, Sign, SolverConfig, SolverResult, Status, Trace, TraceRecord};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
