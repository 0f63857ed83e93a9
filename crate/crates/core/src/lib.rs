//! Legendre-Gauss-Lobatto collocation for boundary null control of the wave
//! equation on `(-1, 1)` and `(-1, 1)^2`.
//!
//! The adjoint problem is solved exactly in the discrete eigenbasis, the HUM
//! functional is minimised by preconditioned conjugate gradients on modal
//! final data, and the resulting controls are checked by a forward solve.

pub mod adjoint1d;
pub mod cg;
pub mod control2d;
pub mod error;
pub mod forward1d;
pub mod hum1d;
pub mod initial_data;
pub mod operators1d;
pub mod par;
pub mod quadrature;
pub mod spectral_analysis;

pub use error::{HumError, Result};
