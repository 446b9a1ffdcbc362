//! Piecewise polynomials over the delay-interval grid of `[−τ_K, 0]`.

use nalgebra::DMatrix;

use super::poly::{MatrixPoly, Var};
use crate::error::{Error, Result};

/// Delays `τ_1 < … < τ_K` with implicit `τ_0 = 0`; interval `i` (0-based) is
/// `[−τ_{i+1}, −τ_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalGrid {
    taus: Vec<f64>,
}

impl IntervalGrid {
    pub fn new(taus: &[f64]) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidGrid("at least one delay is required".into()));
        }
        let mut prev = 0.0;
        for &t in taus {
            if !t.is_finite() || t <= prev {
                return Err(Error::InvalidGrid(format!(
                    "delays must be finite, positive and strictly increasing (got {taus:?})"
                )));
            }
            prev = t;
        }
        Ok(IntervalGrid {
            taus: taus.to_vec(),
        })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    /// Number of intervals `K`.
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// `τ_K`.
    pub fn horizon(&self) -> f64 {
        *self.taus.last().expect("grid is nonempty")
    }

    /// `τ_i` for 0-based `i`, i.e. the `(i+1)`-th delay; `tau_before(i)` is `τ_{i}` with `τ_0 = 0`.
    pub fn tau(&self, i: usize) -> f64 {
        self.taus[i]
    }

    pub fn tau_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.taus[i - 1]
        }
    }

    /// `(lower, upper)` endpoints of interval `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (-self.taus[i], -self.tau_before(i))
    }

    pub fn width(&self, i: usize) -> f64 {
        self.taus[i] - self.tau_before(i)
    }

    /// Index of the interval containing `s` (left-closed; `0` maps to the first).
    pub fn locate(&self, s: f64) -> Option<usize> {
        if s > 0.0 || s < -self.horizon() {
            return None;
        }
        (0..self.len()).find(|&i| s >= -self.taus[i])
    }
}

/// One matrix polynomial in `s` per interval.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly1D {
    pub grid: IntervalGrid,
    pub pieces: Vec<MatrixPoly>,
}

impl PiecewisePoly1D {
    pub fn new(grid: IntervalGrid, pieces: Vec<MatrixPoly>) -> Result<Self> {
        if pieces.len() != grid.len() {
            return Err(Error::DimensionMismatch(
                "one piece per interval required".into(),
            ));
        }
        if pieces.iter().any(|p| p.shape() != pieces[0].shape()) {
            return Err(Error::DimensionMismatch("pieces must share a shape".into()));
        }
        Ok(PiecewisePoly1D { grid, pieces })
    }

    pub fn zeros(grid: &IntervalGrid, rows: usize, cols: usize) -> Self {
        PiecewisePoly1D {
            grid: grid.clone(),
            pieces: vec![MatrixPoly::zeros(rows, cols); grid.len()],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.pieces[0].shape()
    }

    pub fn add_scaled(&self, other: &PiecewisePoly1D, c: f64) -> Result<PiecewisePoly1D> {
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(a, b)| a.add_scaled(b, c))
            .collect::<Result<_>>()?;
        PiecewisePoly1D::new(self.grid.clone(), pieces)
    }

    pub fn map(&self, f: impl Fn(&MatrixPoly) -> MatrixPoly) -> PiecewisePoly1D {
        PiecewisePoly1D {
            grid: self.grid.clone(),
            pieces: self.pieces.iter().map(f).collect(),
        }
    }

    pub fn evaluate(&self, s: f64, assignment: &[f64]) -> Result<DMatrix<f64>> {
        let i = self
            .grid
            .locate(s)
            .ok_or_else(|| Error::InvalidArgument(format!("s = {s} outside the grid")))?;
        self.pieces[i].evaluate(s, 0.0, assignment)
    }

    /// `Σ_i ∫_{interval i} piece_i(s) ds`.
    pub fn integral(&self) -> Result<MatrixPoly> {
        let (r, c) = self.shape();
        let mut acc = MatrixPoly::zeros(r, c);
        for (i, p) in self.pieces.iter().enumerate() {
            let (a, b) = self.grid.interval(i);
            acc = acc.add(&p.integrate_definite(Var::S, a, b))?;
        }
        Ok(acc)
    }
}

/// One matrix polynomial in `(s, θ)` per interval pair `(i, j)`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly2D {
    pub grid: IntervalGrid,
    pub pieces: Vec<MatrixPoly>,
}

impl PiecewisePoly2D {
    pub fn new(grid: IntervalGrid, pieces: Vec<MatrixPoly>) -> Result<Self> {
        let k = grid.len();
        if pieces.len() != k * k {
            return Err(Error::DimensionMismatch("K*K pieces required".into()));
        }
        if pieces.iter().any(|p| p.shape() != pieces[0].shape()) {
            return Err(Error::DimensionMismatch("pieces must share a shape".into()));
        }
        Ok(PiecewisePoly2D { grid, pieces })
    }

    pub fn zeros(grid: &IntervalGrid, rows: usize, cols: usize) -> Self {
        let k = grid.len();
        PiecewisePoly2D {
            grid: grid.clone(),
            pieces: vec![MatrixPoly::zeros(rows, cols); k * k],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.pieces[0].shape()
    }

    pub fn piece(&self, i: usize, j: usize) -> &MatrixPoly {
        &self.pieces[i * self.grid.len() + j]
    }

    pub fn piece_mut(&mut self, i: usize, j: usize) -> &mut MatrixPoly {
        let k = self.grid.len();
        &mut self.pieces[i * k + j]
    }

    pub fn add_scaled(&self, other: &PiecewisePoly2D, c: f64) -> Result<PiecewisePoly2D> {
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(a, b)| a.add_scaled(b, c))
            .collect::<Result<_>>()?;
        PiecewisePoly2D::new(self.grid.clone(), pieces)
    }

    pub fn map(&self, f: impl Fn(&MatrixPoly) -> MatrixPoly) -> PiecewisePoly2D {
        PiecewisePoly2D {
            grid: self.grid.clone(),
            pieces: self.pieces.iter().map(f).collect(),
        }
    }

    pub fn evaluate(&self, s: f64, theta: f64, assignment: &[f64]) -> Result<DMatrix<f64>> {
        let out_of_grid = || Error::InvalidArgument(format!("({s}, {theta}) outside the grid"));
        let i = self.grid.locate(s).ok_or_else(out_of_grid)?;
        let j = self.grid.locate(theta).ok_or_else(out_of_grid)?;
        self.piece(i, j).evaluate(s, theta, assignment)
    }
}
