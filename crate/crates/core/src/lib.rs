//! Gaussian-ansatz projection dynamics for dissipative bosonic models.
//!
//! The crate evolves the means `m` and covariance `C` of a Gaussian ansatz
//! under a Lindblad generator split into a quadratic free part and a
//! polynomial interaction. The first-order equations are the Wick-closed
//! Heisenberg equations in the interaction picture; the second-order
//! time-convolutionless correction adds the memory integral and the
//! projector subtraction built from ansatz derivatives.
//!
//! The driven dissipative Kerr oscillator is wired in as the concrete model,
//! and a truncated Fock-basis Lindblad solver serves as the exact reference.

pub mod bridge;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod kerr;
pub mod liouville;
pub mod matfun;
pub mod moments;
pub mod ode;
pub mod quad;

pub use error::{Error, Result};
pub use matfun::{CMatrix, CVector, C64};
