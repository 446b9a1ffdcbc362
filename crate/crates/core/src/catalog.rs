//! Benchmark systems with known stability margins.
//!
//! | name | system | family parameter | margin |
//! |------|--------|------------------|--------|
//! | `scalar_delay` | `ẋ = −x(t−τ)` | `τ` | `π/2` (exact) |
//! | `oscillator_delay` | `ẋ = [[0,1],[−2,0.1]]x + [[0,0],[1,0]]x(t−τ)` | `τ` | stable for `τ ∈ (0.10017, 1.7178)` |
//! | `scalar_two_delay` | `ẋ = −2x + b x(t−1) − x(t−2)` | `b` | `3` (exact) |
//! | `oscillator_two_delay` | `ẋ = [[0,1],[−1,0.1]]x + [[0,0],[−1,0]]x(t−τ/2) + [[0,0],[1,0]]x(t−τ)` | `τ` | `≈ 1.371` |

use nalgebra::DMatrix;

use crate::dual_lmi::ParameterizedFamily;
use crate::error::Result;
use crate::operators::DelaySystem;

fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

/// `ẋ = −x(t−τ)`.
pub fn scalar_delay(tau: f64) -> Result<DelaySystem> {
    DelaySystem::new(vec![mat(1, &[0.0]), mat(1, &[-1.0])], &[tau])
}

/// Damped-negative oscillator with a single delayed position feedback.
pub fn oscillator_delay(tau: f64) -> Result<DelaySystem> {
    DelaySystem::new(
        vec![
            mat(2, &[0.0, 1.0, -2.0, 0.1]),
            mat(2, &[0.0, 0.0, 1.0, 0.0]),
        ],
        &[tau],
    )
}

/// `ẋ = −2x + b x(t−1) − x(t−2)`.
pub fn scalar_two_delay(b: f64) -> Result<DelaySystem> {
    DelaySystem::new(
        vec![mat(1, &[-2.0]), mat(1, &[b]), mat(1, &[-1.0])],
        &[1.0, 2.0],
    )
}

/// Oscillator with feedback at `τ/2` and `τ`.
pub fn oscillator_two_delay(tau: f64) -> Result<DelaySystem> {
    DelaySystem::new(
        vec![
            mat(2, &[0.0, 1.0, -1.0, 0.1]),
            mat(2, &[0.0, 0.0, -1.0, 0.0]),
            mat(2, &[0.0, 0.0, 1.0, 0.0]),
        ],
        &[tau / 2.0, tau],
    )
}

pub fn scalar_delay_family() -> ParameterizedFamily {
    ParameterizedFamily::delay_scaling(scalar_delay(1.0).expect("valid system"))
}

pub fn oscillator_delay_family() -> ParameterizedFamily {
    ParameterizedFamily::delay_scaling(oscillator_delay(1.0).expect("valid system"))
}

pub fn scalar_two_delay_family() -> ParameterizedFamily {
    let dir = vec![mat(1, &[0.0]), mat(1, &[1.0]), mat(1, &[0.0])];
    ParameterizedFamily::matrix(scalar_two_delay(0.0).expect("valid system"), dir)
        .expect("valid family")
}

pub fn oscillator_two_delay_family() -> ParameterizedFamily {
    ParameterizedFamily::delay_scaling(oscillator_two_delay(1.0).expect("valid system"))
}
