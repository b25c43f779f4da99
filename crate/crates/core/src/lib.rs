//! Split-step spectral simulator and variational toolkit for the
//! energy-critical inhomogeneous nonlinear Schrödinger equation
//!
//! ```text
//! i u_t + Δu + μ |x|^{-b} |u|^α u = 0,   α = (4 − 2b)/(N − 2).
//! ```

pub mod classify;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod field;
pub mod groundstate;
pub mod harness;
pub mod model;
pub mod quadrature;

pub use error::{InlsError, Result};
