//! Linear discrete-delay systems `ẋ = A₀x + Σᵢ Aᵢ x(t − τᵢ)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polyalg::IntervalGrid;

/// System matrices `A₀ … A_K` and delays `τ₁ < … < τ_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelaySystem {
    a: Vec<DMatrix<f64>>,
    grid: IntervalGrid,
}

impl DelaySystem {
    /// `a[0]` is the delay-free matrix; `a[i]` multiplies `x(t − taus[i−1])`.
    pub fn new(a: Vec<DMatrix<f64>>, taus: &[f64]) -> Result<Self> {
        if a.len() != taus.len() + 1 {
            return Err(Error::InvalidSystem(format!(
                "{} matrices given for {} delays (expected K+1)",
                a.len(),
                taus.len()
            )));
        }
        let n = a[0].nrows();
        if n == 0 || a.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::InvalidSystem(
                "all matrices must be n×n with n ≥ 1".into(),
            ));
        }
        if a.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidSystem("matrix entries must be finite".into()));
        }
        let grid = IntervalGrid::new(taus).map_err(|e| Error::InvalidSystem(e.to_string()))?;
        Ok(DelaySystem { a, grid })
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.a[0].nrows()
    }

    /// Number of delays `K`.
    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn a(&self, i: usize) -> &DMatrix<f64> {
        &self.a[i]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn taus(&self) -> &[f64] {
        self.grid.taus()
    }

    pub fn grid(&self) -> &IntervalGrid {
        &self.grid
    }

    /// `τ_K`.
    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }
}
