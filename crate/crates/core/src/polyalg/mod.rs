//! Matrix-valued polynomial algebra in `s` and `θ` whose coefficients are
//! affine in SDP decision variables, plus piecewise versions over the
//! delay-interval grid.

mod affine;
mod piecewise;
mod poly;

pub use affine::{AffineAccumulator, AffineScalar, VarId};
pub use piecewise::{IntervalGrid, PiecewisePoly1D, PiecewisePoly2D};
pub use poly::{
    coefficient_equalities, LinearEquation, MatrixPoly, MatrixPolyBuilder, Monomial, Var,
};
