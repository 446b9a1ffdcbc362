//! Certification of exponential stability for linear multi-delay systems
//!
//! ```text
//!   ẋ(t) = A₀x(t) + Σᵢ Aᵢ x(t − τᵢ)
//! ```
//!
//! via dual Lyapunov–Krasovskii conditions posed as sum-of-squares
//! semidefinite programs, together with an independent spectral oracle.
//!
//! Module map:
//! - [`polyalg`]: matrix polynomials in `s, θ` with affine decision-variable coefficients.
//! - [`operators`]: complete-quadratic and multiplier/kernel operators, the
//!   flattening map, derivative operators and spacing operators.
//! - [`soscone`]: Gram parameterisation of the positive operator cone.
//! - [`sdp`]: problem registry, interior-point backend, SDPA files, verification.
//! - [`dual_lmi`]: assembly of the stability programs and margin bisection.
//! - [`oracle`]: characteristic roots by collocation and time-domain simulation.
//! - [`catalog`]: the reference systems and parameter families.
//! - [`selftest`]: randomized consistency checks of the operator algebra.
//! - [`par`]: the rayon/sequential execution switch.
//! - [`quadrature`]: Gauss–Legendre rules.

pub mod catalog;
pub mod dual_lmi;
pub mod error;
pub mod operators;
pub mod oracle;
pub mod par;
pub mod polyalg;
pub mod quadrature;
pub mod sdp;
pub mod selftest;
pub mod soscone;

pub use error::{Error, Result};
