//! Multiplier/kernel operators `x ↦ M(s)x(s) + ∫ N(s,θ)x(θ)dθ` on `L₂[−τ_K, 0]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polyalg::{IntervalGrid, MatrixPoly, PiecewisePoly1D, PiecewisePoly2D, Var};
use crate::quadrature::GaussLegendre;

/// A piecewise-polynomial multiplier `M` and kernel `N` on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MultKernelOp {
    pub mult: PiecewisePoly1D,
    pub kernel: PiecewisePoly2D,
}

impl MultKernelOp {
    pub fn new(mult: PiecewisePoly1D, kernel: PiecewisePoly2D) -> Result<Self> {
        let (r, c) = mult.shape();
        if r != c || kernel.shape() != (r, c) {
            return Err(Error::DimensionMismatch(format!(
                "multiplier {:?} and kernel {:?} must be equal square shapes",
                mult.shape(),
                kernel.shape()
            )));
        }
        if mult.grid != kernel.grid {
            return Err(Error::DimensionMismatch(
                "multiplier and kernel grids differ".into(),
            ));
        }
        Ok(MultKernelOp { mult, kernel })
    }

    pub fn zeros(grid: &IntervalGrid, dim: usize) -> Self {
        MultKernelOp {
            mult: PiecewisePoly1D::zeros(grid, dim, dim),
            kernel: PiecewisePoly2D::zeros(grid, dim, dim),
        }
    }

    pub fn grid(&self) -> &IntervalGrid {
        &self.mult.grid
    }

    pub fn dim(&self) -> usize {
        self.mult.shape().0
    }

    pub fn add_scaled(&self, other: &MultKernelOp, c: f64) -> Result<MultKernelOp> {
        MultKernelOp::new(
            self.mult.add_scaled(&other.mult, c)?,
            self.kernel.add_scaled(&other.kernel, c)?,
        )
    }

    pub fn neg(&self) -> MultKernelOp {
        MultKernelOp {
            mult: self.mult.map(MatrixPoly::neg),
            kernel: self.kernel.map(MatrixPoly::neg),
        }
    }

    pub fn instantiate(&self, assignment: &[f64]) -> Result<MultKernelOp> {
        let mult = self
            .mult
            .pieces
            .iter()
            .map(|p| p.instantiate(assignment))
            .collect::<Result<_>>()?;
        let kern = self
            .kernel
            .pieces
            .iter()
            .map(|p| p.instantiate(assignment))
            .collect::<Result<_>>()?;
        MultKernelOp::new(
            PiecewisePoly1D::new(self.grid().clone(), mult)?,
            PiecewisePoly2D::new(self.grid().clone(), kern)?,
        )
    }

    /// Exact image of a piecewise-polynomial column function `x` (numeric).
    pub fn apply_poly(&self, x: &PiecewisePoly1D) -> Result<PiecewisePoly1D> {
        let k = self.grid().len();
        if x.shape() != (self.dim(), 1) || x.grid != *self.grid() {
            return Err(Error::DimensionMismatch(
                "argument does not match operator".into(),
            ));
        }
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let mut p = self.mult.pieces[i].mul(&x.pieces[i])?;
            for j in 0..k {
                let (a, b) = self.grid().interval(j);
                let t = self
                    .kernel
                    .piece(i, j)
                    .mul(&x.pieces[j].swap_vars())?
                    .integrate_definite(Var::Theta, a, b);
                p = p.add(&t)?;
            }
            out.push(p);
        }
        PiecewisePoly1D::new(self.grid().clone(), out)
    }

    /// Exact `⟨y, op x⟩_{L₂}` for numeric piecewise-polynomial `x`, `y`.
    pub fn inner_product_poly(&self, y: &PiecewisePoly1D, x: &PiecewisePoly1D) -> Result<f64> {
        let ox = self.apply_poly(x)?;
        l2_inner_poly(y, &ox)
    }

    /// `(op x)(s)` for `s` in interval `i`, with `x(j, θ)` sampled by Gauss
    /// quadrature on each interval. The operator must be numeric.
    pub fn apply_sampled(
        &self,
        x: &dyn Fn(usize, f64) -> DVector<f64>,
        i: usize,
        s: f64,
        rule: &GaussLegendre,
    ) -> Result<DVector<f64>> {
        let no_vars: [f64; 0] = [];
        let mut out = self.mult.pieces[i].evaluate(s, 0.0, &no_vars)? * x(i, s);
        for j in 0..self.grid().len() {
            let (a, b) = self.grid().interval(j);
            for (t, w) in rule.nodes_on(a, b) {
                out += self.kernel.piece(i, j).evaluate(s, t, &no_vars)? * x(j, t) * w;
            }
        }
        Ok(out)
    }

    /// `⟨x, op x⟩_{L₂}` by Gauss quadrature; the operator must be numeric.
    pub fn quadratic_form_sampled(
        &self,
        x: &dyn Fn(usize, f64) -> DVector<f64>,
        rule: &GaussLegendre,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.grid().len() {
            let (a, b) = self.grid().interval(i);
            for (s, w) in rule.nodes_on(a, b) {
                acc += w * x(i, s).dot(&self.apply_sampled(x, i, s, rule)?);
            }
        }
        Ok(acc)
    }
}

/// Exact `Σᵢ ∫ yᵢᵀ xᵢ` for numeric piecewise-polynomial columns.
pub fn l2_inner_poly(y: &PiecewisePoly1D, x: &PiecewisePoly1D) -> Result<f64> {
    let no_vars: [f64; 0] = [];
    let mut acc = 0.0;
    for (i, (a, b)) in y.pieces.iter().zip(&x.pieces).enumerate() {
        let (lo, hi) = y.grid.interval(i);
        let v: DMatrix<f64> = a
            .transpose()
            .mul(b)?
            .integrate_definite(Var::S, lo, hi)
            .evaluate(0.0, 0.0, &no_vars)?;
        acc += v[(0, 0)];
    }
    Ok(acc)
}
