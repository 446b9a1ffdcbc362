//! Spacing operators: `{F, H}` whose quadratic form vanishes on
//! `ℝᵐ × L₂ⁿ` (finite part constant in `s`).

use super::free::{
    adjoint_kernel, free_poly_1d, free_poly_2d, free_symmetric_kernel_family,
    free_symmetric_poly_1d, BivariateSupport, VarAllocator,
};
use crate::error::Result;
use crate::polyalg::{
    IntervalGrid, LinearEquation, MatrixPoly, PiecewisePoly1D, PiecewisePoly2D, Var,
};

use super::multkernel::MultKernelOp;

/// Degrees of the free spacing functions.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SpacingParams {
    /// Degree of the zero-mean multiplier `K(s)`.
    pub k_degree: u32,
    /// Support of the kernels `L₁₁`, `L₁₂`, `L₂₁`.
    pub l_support: BivariateSupport,
    /// Tie `L₂₁(s,θ) = L₁₂(θ,s)ᵀ`, `L₁₁` to a symmetric family and `K` to be
    /// symmetric, making `{F, H}` self-adjoint.
    pub tied: bool,
}

impl SpacingParams {
    pub fn uniform(d: u32) -> Self {
        SpacingParams {
            k_degree: d,
            l_support: BivariateSupport::PerVariable(d),
            tied: false,
        }
    }
}

/// A spacing pair together with the zero-mean equalities on `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spacing {
    pub op: MultKernelOp,
    pub constraints: Vec<LinearEquation>,
}

/// `F = [[K(s) + (1/τ_K)∫∫L₁₁, ∫L₁₂(ω,s)dω], [∫L₂₁(s,ω)dω, 0]]`,
/// `H = −[[L₁₁, L₁₂], [L₂₁, 0]]`, with `∫ K = 0`.
pub fn spacing_make(
    alloc: &mut dyn VarAllocator,
    m: usize,
    n: usize,
    grid: &IntervalGrid,
    params: SpacingParams,
) -> Result<Spacing> {
    let k = grid.len();
    let tk = grid.horizon();
    let kfun: Vec<MatrixPoly> = (0..k)
        .map(|_| {
            if params.tied {
                free_symmetric_poly_1d(alloc, m, params.k_degree)
            } else {
                free_poly_1d(alloc, m, m, params.k_degree)
            }
        })
        .collect();
    let l11: Vec<MatrixPoly> = if params.tied {
        free_symmetric_kernel_family(alloc, m, k, params.l_support)
    } else {
        (0..k * k)
            .map(|_| free_poly_2d(alloc, m, m, params.l_support))
            .collect()
    };
    let l12: Vec<MatrixPoly> = (0..k * k)
        .map(|_| free_poly_2d(alloc, m, n, params.l_support))
        .collect();
    let l21: Vec<MatrixPoly> = if params.tied {
        (0..k * k)
            .map(|idx| adjoint_kernel(&l12[(idx % k) * k + idx / k]))
            .collect()
    } else {
        (0..k * k)
            .map(|_| free_poly_2d(alloc, n, m, params.l_support))
            .collect()
    };

    let mut c = MatrixPoly::zeros(m, m);
    for a in 0..k {
        for b in 0..k {
            let (sa, ea) = grid.interval(a);
            let (sb, eb) = grid.interval(b);
            let v = l11[a * k + b]
                .integrate_definite(Var::S, sa, ea)
                .integrate_definite(Var::Theta, sb, eb);
            c = c.add(&v)?;
        }
    }
    let c = c.scale(1.0 / tk);

    let mut fpieces = Vec::with_capacity(k);
    for i in 0..k {
        let mut f12 = MatrixPoly::zeros(m, n);
        let mut f21 = MatrixPoly::zeros(n, m);
        for j in 0..k {
            let (a, b) = grid.interval(j);
            f12 = f12.add(&l12[j * k + i].integrate_definite(Var::S, a, b).swap_vars())?;
            f21 = f21.add(&l21[i * k + j].integrate_definite(Var::Theta, a, b))?;
        }
        fpieces.push(MatrixPoly::from_blocks(&[
            vec![kfun[i].add(&c)?, f12],
            vec![f21, MatrixPoly::zeros(n, n)],
        ])?);
    }
    let hpieces = (0..k * k)
        .map(|idx| {
            MatrixPoly::from_blocks(&[
                vec![l11[idx].neg(), l12[idx].neg()],
                vec![l21[idx].neg(), MatrixPoly::zeros(n, n)],
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mean = PiecewisePoly1D::new(grid.clone(), kfun)?.integral()?;
    let mut constraints = Vec::new();
    for r in 0..m {
        for col in 0..m {
            if params.tied && col < r {
                continue;
            }
            let e = LinearEquation::from_affine_zero(&mean.entry(
                crate::polyalg::Monomial::ONE,
                r,
                col,
            ));
            if !e.terms.is_empty() || e.rhs != 0.0 {
                constraints.push(e);
            }
        }
    }
    let op = MultKernelOp::new(
        PiecewisePoly1D::new(grid.clone(), fpieces)?,
        PiecewisePoly2D::new(grid.clone(), hpieces)?,
    )?;
    Ok(Spacing { op, constraints })
}
