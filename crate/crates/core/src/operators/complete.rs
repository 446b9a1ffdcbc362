//! Complete-quadratic operators `{P, Qᵢ, Sᵢ, R_ij}` on `ℝᵐ × Π L₂ⁿ[−τᵢ, 0]`.

use nalgebra::DMatrix;

use super::free::{
    free_poly_1d, free_symmetric_kernel_family, free_symmetric_matrix, free_symmetric_poly_1d,
    BivariateSupport, VarAllocator,
};
use super::multkernel::MultKernelOp;
use crate::error::{Error, Result};
use crate::polyalg::{
    coefficient_equalities, IntervalGrid, LinearEquation, MatrixPoly, PiecewisePoly1D,
    PiecewisePoly2D, Var,
};

/// The operator
/// `(Pz)_fin = P x + Σᵢ ∫ Qᵢ(s) φᵢ(s) ds`,
/// `(Pz)ᵢ(s) = τ_K Qᵢ(s)ᵀ x + τ_K Sᵢ(s) φᵢ(s) + Σⱼ ∫ R_ij(s,θ) φⱼ(θ) dθ`,
/// with finite part of dimension `m` and function parts of dimension `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompleteQuadOp {
    pub grid: IntervalGrid,
    pub m: usize,
    pub n: usize,
    /// `m × m`, constant.
    pub p: MatrixPoly,
    /// `m × n` polynomials in `s`, one per delay.
    pub q: Vec<MatrixPoly>,
    /// `n × n` polynomials in `s`, one per delay.
    pub s: Vec<MatrixPoly>,
    /// `n × n` polynomials in `(s, θ)`, `K × K` row-major.
    pub r: Vec<MatrixPoly>,
    /// Linear relations among the coefficients that the operator is
    /// only meaningful under (empty when imposed by construction).
    pub structural_constraints: Vec<LinearEquation>,
}

/// Degrees of a freshly generated operator.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct OperatorShape {
    pub s_degree: u32,
    pub r_support: BivariateSupport,
    /// At `K = 1`, substitute `P = τ(R(0,0)+S(0))` and `Q(s) = R(0,s)`
    /// instead of keeping them free with equality constraints.
    pub eliminate_single_delay: bool,
}

impl OperatorShape {
    /// Every entry a polynomial of degree ≤ `d` in each variable.
    pub fn uniform(d: u32) -> Self {
        OperatorShape {
            s_degree: d,
            r_support: BivariateSupport::PerVariable(d),
            eliminate_single_delay: true,
        }
    }
}

/// Free operator on `ℝⁿ × Π L₂ⁿ` with degree `d` entries.
pub fn make_free_operator(
    alloc: &mut dyn VarAllocator,
    n: usize,
    taus: &[f64],
    d: u32,
) -> Result<CompleteQuadOp> {
    let grid = IntervalGrid::new(taus)?;
    make_free_operator_with(alloc, n, &grid, OperatorShape::uniform(d))
}

pub fn make_free_operator_with(
    alloc: &mut dyn VarAllocator,
    n: usize,
    grid: &IntervalGrid,
    shape: OperatorShape,
) -> Result<CompleteQuadOp> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let k = grid.len();
    let tk = grid.horizon();
    let s: Vec<MatrixPoly> = (0..k)
        .map(|_| free_symmetric_poly_1d(alloc, n, shape.s_degree))
        .collect();
    let r = free_symmetric_kernel_family(alloc, n, k, shape.r_support);

    if k == 1 && shape.eliminate_single_delay {
        let r00 = r[0].evaluate_var(Var::S, 0.0).evaluate_var(Var::Theta, 0.0);
        let s0 = s[0].evaluate_var(Var::S, 0.0);
        let p = r00.add(&s0)?.scale(tk);
        let q = vec![r[0].evaluate_var(Var::S, 0.0).swap_vars()];
        return Ok(CompleteQuadOp {
            grid: grid.clone(),
            m: n,
            n,
            p,
            q,
            s,
            r,
            structural_constraints: Vec::new(),
        });
    }

    let p = MatrixPoly::from_affine(n, n, free_symmetric_matrix(alloc, n));
    let qdeg = shape.r_support.max_single_degree();
    let q: Vec<MatrixPoly> = (0..k).map(|_| free_poly_1d(alloc, n, n, qdeg)).collect();

    let mut cons = Vec::new();
    for i in 0..k {
        let rhs = q[i]
            .evaluate_var(Var::S, 0.0)
            .transpose()
            .add(&s[i].evaluate_var(Var::S, 0.0))?;
        cons.extend(coefficient_equalities(&p, &rhs.scale(tk))?);
    }
    for i in 0..k {
        for (j, qj) in q.iter().enumerate() {
            let rij0 = r[i * k + j].evaluate_var(Var::S, 0.0).swap_vars();
            cons.extend(coefficient_equalities(qj, &rij0)?);
        }
    }
    Ok(CompleteQuadOp {
        grid: grid.clone(),
        m: n,
        n,
        p,
        q,
        s,
        r,
        structural_constraints: cons,
    })
}

/// How the kernel blocks are scaled when flattening.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum FlattenMode {
    /// `N_ij = R_ij(ρᵢ(s), ρⱼ(θ)) / (aᵢ aⱼ)`: the quadratic form is preserved.
    #[default]
    JacobianCorrected,
    /// `N_ij = R_ij(ρᵢ(s), ρⱼ(θ))` with no change-of-variables factor.
    Direct,
}

impl CompleteQuadOp {
    pub fn k(&self) -> usize {
        self.grid.len()
    }

    pub fn r(&self, i: usize, j: usize) -> &MatrixPoly {
        &self.r[i * self.k() + j]
    }

    /// Compression ratio `aᵢ = (τᵢ − τᵢ₋₁)/τᵢ` of delay `i` (0-based).
    pub fn compression(&self, i: usize) -> f64 {
        self.grid.width(i) / self.grid.tau(i)
    }

    /// Replaces every decision variable by its value.
    pub fn instantiate(&self, assignment: &[f64]) -> Result<CompleteQuadOp> {
        let inst = |v: &[MatrixPoly]| -> Result<Vec<MatrixPoly>> {
            v.iter().map(|p| p.instantiate(assignment)).collect()
        };
        Ok(CompleteQuadOp {
            grid: self.grid.clone(),
            m: self.m,
            n: self.n,
            p: self.p.instantiate(assignment)?,
            q: inst(&self.q)?,
            s: inst(&self.s)?,
            r: inst(&self.r)?,
            structural_constraints: Vec::new(),
        })
    }

    /// Largest structural-constraint residual under `assignment`.
    pub fn constraint_residual(&self, assignment: &[f64]) -> Result<f64> {
        self.structural_constraints
            .iter()
            .map(|e| e.residual(assignment).map(f64::abs))
            .try_fold(0.0_f64, |acc, r| r.map(|r| acc.max(r)))
    }

    /// Map to a multiplier/kernel pair on `L₂^{m+n}[−τ_K, 0]` via the
    /// compressed concatenation `φ̂(s) = [x; φᵢ(ρᵢ(s))]`, `ρᵢ(s) = (s+τᵢ₋₁)/aᵢ`.
    pub fn flatten(&self, mode: FlattenMode) -> Result<MultKernelOp> {
        let (m, n, k) = (self.m, self.n, self.k());
        let tk = self.grid.horizon();
        let zero_mn = MatrixPoly::zeros(m, n);
        let mut mult = Vec::with_capacity(k);
        for i in 0..k {
            let a = self.compression(i);
            let (alpha, beta) = (1.0 / a, self.grid.tau_before(i) / a);
            let qi = self.q[i]
                .affine_substitute(Var::S, alpha, beta)?
                .scale(tk / a);
            let si = self.s[i]
                .affine_substitute(Var::S, alpha, beta)?
                .scale(tk / a);
            mult.push(MatrixPoly::from_blocks(&[
                vec![self.p.clone(), qi.clone()],
                vec![qi.transpose(), si],
            ])?);
        }
        let mut kern = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let (ai, aj) = (self.compression(i), self.compression(j));
                let c = match mode {
                    FlattenMode::JacobianCorrected => 1.0 / (ai * aj),
                    FlattenMode::Direct => 1.0,
                };
                let rij = self
                    .r(i, j)
                    .affine_substitute(Var::S, 1.0 / ai, self.grid.tau_before(i) / ai)?
                    .affine_substitute(Var::Theta, 1.0 / aj, self.grid.tau_before(j) / aj)?
                    .scale(c);
                kern.push(MatrixPoly::from_blocks(&[
                    vec![MatrixPoly::zeros(m, m), zero_mn.clone()],
                    vec![zero_mn.transpose(), rij],
                ])?);
            }
        }
        MultKernelOp::new(
            PiecewisePoly1D::new(self.grid.clone(), mult)?,
            PiecewisePoly2D::new(self.grid.clone(), kern)?,
        )
    }

    /// Exact application to a polynomial state: `x` is a numeric `m`-vector,
    /// `phi[i]` an `n × 1` numeric polynomial in `s` on `[−τᵢ, 0]`.
    pub fn apply(
        &self,
        x: &DMatrix<f64>,
        phi: &[MatrixPoly],
    ) -> Result<(DMatrix<f64>, Vec<MatrixPoly>)> {
        let k = self.k();
        if phi.len() != k || x.nrows() != self.m {
            return Err(Error::DimensionMismatch(
                "state does not match operator".into(),
            ));
        }
        let no_vars: [f64; 0] = [];
        let xp = MatrixPoly::from_matrix(x);
        let mut y = self.p.mul(&xp)?;
        for i in 0..k {
            let t = self.q[i]
                .mul(&phi[i])?
                .integrate_definite(Var::S, -self.grid.tau(i), 0.0);
            y = y.add(&t)?;
        }
        let tk = self.grid.horizon();
        let mut psi = Vec::with_capacity(k);
        for i in 0..k {
            let mut p = self.q[i].transpose().mul(&xp)?.scale(tk);
            p = p.add(&self.s[i].mul(&phi[i])?.scale(tk))?;
            for (j, phij) in phi.iter().enumerate() {
                let t = self.r(i, j).mul(&phij.swap_vars())?.integrate_definite(
                    Var::Theta,
                    -self.grid.tau(j),
                    0.0,
                );
                p = p.add(&t)?;
            }
            psi.push(p);
        }
        Ok((y.evaluate(0.0, 0.0, &no_vars)?, psi))
    }

    /// `⟨(y, ψ), (x, φ)⟩ = τ_K yᵀx + Σᵢ ∫ ψᵢᵀ φᵢ` for polynomial states.
    pub fn z_inner(
        &self,
        y: &DMatrix<f64>,
        psi: &[MatrixPoly],
        x: &DMatrix<f64>,
        phi: &[MatrixPoly],
    ) -> Result<f64> {
        z_inner(&self.grid, y, psi, x, phi)
    }
}

/// Inner product on `ℝᵐ × Π L₂ⁿ[−τᵢ, 0]` for numeric polynomial states.
pub fn z_inner(
    grid: &IntervalGrid,
    y: &DMatrix<f64>,
    psi: &[MatrixPoly],
    x: &DMatrix<f64>,
    phi: &[MatrixPoly],
) -> Result<f64> {
    let no_vars: [f64; 0] = [];
    let mut acc = grid.horizon() * y.dot(x);
    for (i, (a, b)) in psi.iter().zip(phi).enumerate() {
        let v = a
            .transpose()
            .mul(b)?
            .integrate_definite(Var::S, -grid.tau(i), 0.0);
        acc += v.evaluate(0.0, 0.0, &no_vars)?[(0, 0)];
    }
    Ok(acc)
}
