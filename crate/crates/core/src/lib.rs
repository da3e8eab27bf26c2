//! Exact operator algebra and numerical spectral analysis for the two-mode
//! non-Hermitian Hamiltonian `H = −¼Δ + γ(y∂x + x∂y) + x² + y²`.
//!
//! * [`algebra`]: normal-ordered differential operators with exact
//!   coefficients and the identity suite.
//! * [`special`]: Hermite functions and Gauss quadrature.
//! * [`eigensystem`]: closed-form eigenfunctions, inner products, amplitudes.
//! * [`fock`]: truncated matrices, spectra, numerical range, pseudospectra.
//! * [`wkb`]: semiclassical phases and overlap integrals.

pub mod algebra;
pub mod eigensystem;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod ring;
pub mod special;
pub mod wkb;

pub use error::{Error, Result};
