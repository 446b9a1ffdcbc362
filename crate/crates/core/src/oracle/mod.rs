//! Independent stability ground truth: characteristic roots by piecewise
//! Chebyshev collocation of the infinitesimal generator, and a fixed-step
//! time-domain simulator.

mod simulate;
mod spectrum;

pub use simulate::{simulate, Trajectory};
pub use spectrum::{
    abscissa_sweep, characteristic_matrix, characteristic_residual, spectral_abscissa,
    spectral_abscissa_auto, SpectrumResult, DEFAULT_COLLOCATION, RESIDUAL_TOLERANCE,
};
