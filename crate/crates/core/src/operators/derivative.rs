//! The operators `D, E` describing `⟨APz, z⟩ + ⟨z, APz⟩` for a candidate `P`.

use nalgebra::DMatrix;

use super::complete::CompleteQuadOp;
use super::system::DelaySystem;
use crate::error::{Error, Result};
use crate::polyalg::{MatrixPoly, Var};

/// Single-delay derivative data: `D0` (`2n × 2n`), `V(s) = [S₁₃(s); 0]`
/// (`2n × n`), `Ṡ`, and `E = ∂_s R + ∂_θ R`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeOpSingle {
    pub d0: MatrixPoly,
    pub v: MatrixPoly,
    pub sdot: MatrixPoly,
    pub e: MatrixPoly,
}

/// Multi-delay derivative data: `D1` (`n(K+1)` square), `Vᵢ(s) = [Bᵢ(s); 0; …]`,
/// `Ṡᵢ`, and `G_ij = ∂_s R_ij + ∂_θ R_ij` (`K × K` row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeOpMulti {
    pub d1: MatrixPoly,
    pub v: Vec<MatrixPoly>,
    pub sdot: Vec<MatrixPoly>,
    pub g: Vec<MatrixPoly>,
}

/// `R(a, θ)` as a polynomial in `s`.
fn first_arg_fixed(r: &MatrixPoly, a: f64) -> MatrixPoly {
    r.evaluate_var(Var::S, a).swap_vars()
}

fn constant_at(p: &MatrixPoly, s: f64) -> MatrixPoly {
    p.evaluate_var(Var::S, s)
}

pub fn derivative_op_single(
    sys: &DelaySystem,
    s: &MatrixPoly,
    r: &MatrixPoly,
) -> Result<DerivativeOpSingle> {
    if sys.k() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-delay construction needs K = 1, got {}",
            sys.k()
        )));
    }
    let n = sys.n();
    if s.shape() != (n, n) || r.shape() != (n, n) {
        return Err(Error::DimensionMismatch("S and R must be n×n".into()));
    }
    let tau = sys.taus()[0];
    let (a0, a1) = (sys.a(0), sys.a(1));
    let r00 = r.evaluate_var(Var::S, 0.0).evaluate_var(Var::Theta, 0.0);
    let s0 = constant_at(s, 0.0);
    let r_m0 = r.evaluate_var(Var::S, -tau).evaluate_var(Var::Theta, 0.0);
    let s_m = constant_at(s, -tau);

    let s11 = r00
        .add(&s0)?
        .left_mul_matrix(&(a0 * tau))?
        .add(&r_m0.left_mul_matrix(&(a1 * tau))?)?
        .add(&s0.scale(0.5))?;
    let s12 = s_m.left_mul_matrix(&(a1 * tau))?;
    let s22 = s_m.neg();
    let d0 = MatrixPoly::from_blocks(&[
        vec![s11.add(&s11.transpose())?, s12.clone()],
        vec![s12.transpose(), s22],
    ])?;

    let rdot_s0 = r
        .evaluate_var(Var::Theta, 0.0)
        .differentiate(Var::S)
        .transpose();
    let s13 = first_arg_fixed(r, 0.0)
        .left_mul_matrix(a0)?
        .add(&first_arg_fixed(r, -tau).left_mul_matrix(a1)?)?
        .add(&rdot_s0)?;
    let v = MatrixPoly::from_blocks(&[vec![s13], vec![MatrixPoly::zeros(n, n)]])?;
    let e = r.differentiate(Var::S).add(&r.differentiate(Var::Theta))?;
    Ok(DerivativeOpSingle {
        d0,
        v,
        sdot: s.differentiate(Var::S),
        e,
    })
}

pub fn derivative_op_multi(sys: &DelaySystem, op: &CompleteQuadOp) -> Result<DerivativeOpMulti> {
    let (n, k) = (sys.n(), sys.k());
    if op.n != n || op.m != n || op.k() != k || op.grid != *sys.grid() {
        return Err(Error::DimensionMismatch(
            "operator does not match the system".into(),
        ));
    }
    let tk = sys.horizon();
    let taus = sys.taus();

    // C₀ = A₀P + τ_K Σ AᵢQᵢ(−τᵢ)ᵀ + ½ Σ Sᵢ(0)
    let mut c0 = op.p.left_mul_matrix(sys.a(0))?;
    for i in 0..k {
        let qt = constant_at(&op.q[i], -taus[i]).transpose();
        c0 = c0.add(&qt.left_mul_matrix(&(sys.a(i + 1) * tk))?)?;
        c0 = c0.add(&constant_at(&op.s[i], 0.0).scale(0.5))?;
    }
    let zero = MatrixPoly::zeros(n, n);
    let mut rows: Vec<Vec<MatrixPoly>> = vec![vec![zero.clone(); k + 1]; k + 1];
    rows[0][0] = c0.add(&c0.transpose())?;
    for i in 0..k {
        let si = constant_at(&op.s[i], -taus[i]);
        let ci = si.left_mul_matrix(&(sys.a(i + 1) * tk))?;
        rows[0][i + 1] = ci.clone();
        rows[i + 1][0] = ci.transpose();
        rows[i + 1][i + 1] = si.neg();
    }
    let d1 = MatrixPoly::from_blocks(&rows)?;

    // Bᵢ(s) = A₀Qᵢ(s) + Q̇ᵢ(s) + Σⱼ Aⱼ R_ji(−τⱼ, s)
    let mut v = Vec::with_capacity(k);
    for i in 0..k {
        let mut b = op.q[i]
            .left_mul_matrix(sys.a(0))?
            .add(&op.q[i].differentiate(Var::S))?;
        for j in 0..k {
            b = b.add(&first_arg_fixed(op.r(j, i), -taus[j]).left_mul_matrix(sys.a(j + 1))?)?;
        }
        let mut col = vec![vec![b]];
        col.extend((0..k).map(|_| vec![zero.clone()]));
        v.push(MatrixPoly::from_blocks(&col)?);
    }
    let sdot = op.s.iter().map(|s| s.differentiate(Var::S)).collect();
    let g =
        op.r.iter()
            .map(|r| r.differentiate(Var::S).add(&r.differentiate(Var::Theta)))
            .collect::<Result<_>>()?;
    Ok(DerivativeOpMulti { d1, v, sdot, g })
}

impl DerivativeOpMulti {
    /// The complete-quadratic operator `{D1 + ε(Iₙ ⊕ 0), Vᵢ, Ṡᵢ + εI, G_ij}` on
    /// `ℝ^{n(K+1)} × Π L₂ⁿ`.
    pub fn to_complete_op(&self, sys: &DelaySystem, epsilon: f64) -> Result<CompleteQuadOp> {
        let (n, k) = (sys.n(), sys.k());
        let m = n * (k + 1);
        let mut lead = DMatrix::zeros(m, m);
        lead.view_mut((0, 0), (n, n)).fill_with_identity();
        let eye = MatrixPoly::identity(n).scale(epsilon);
        Ok(CompleteQuadOp {
            grid: sys.grid().clone(),
            m,
            n,
            p: self.d1.add(&MatrixPoly::from_matrix(&(lead * epsilon)))?,
            q: self.v.clone(),
            s: self
                .sdot
                .iter()
                .map(|s| s.add(&eye))
                .collect::<Result<_>>()?,
            r: self.g.clone(),
            structural_constraints: Vec::new(),
        })
    }
}
