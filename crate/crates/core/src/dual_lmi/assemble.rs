//! Assembly of the dual stability programs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{
    derivative_op_multi, derivative_op_single, make_free_operator_with, spacing_make,
    BivariateSupport, CompleteQuadOp, DelaySystem, FlattenMode, MultKernelOp, OperatorShape,
    SpacingParams,
};
use crate::polyalg::{LinearEquation, MatrixPoly, Monomial};
use crate::sdp::SdpProblem;
use crate::soscone::{make_xi_member, XiOptions};

/// How the user-facing degree `d` maps onto the Gram degree `d'` and the
/// degrees of the free operator polynomials.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum DegreeMap {
    /// `d' = d`; `Sᵢ` of degree `2d+2` and `R_ij` of total degree `2d`,
    /// i.e. exactly the degrees a cone member of Gram degree `d` produces.
    #[default]
    Matched,
    /// `d' = d + 1`; `Sᵢ` of degree `d` and `R_ij` of degree `d` per variable.
    Lifted,
}

impl DegreeMap {
    pub fn xi_degree(self, d: u32) -> u32 {
        match self {
            DegreeMap::Matched => d,
            DegreeMap::Lifted => d + 1,
        }
    }

    pub fn operator_shape(self, d: u32, eliminate_single_delay: bool) -> OperatorShape {
        match self {
            DegreeMap::Matched => OperatorShape {
                s_degree: 2 * d + 2,
                r_support: BivariateSupport::Total(2 * d),
                eliminate_single_delay,
            },
            DegreeMap::Lifted => OperatorShape {
                s_degree: d,
                r_support: BivariateSupport::PerVariable(d),
                eliminate_single_delay,
            },
        }
    }
}

/// Which assembly produced a program.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AssemblyPath {
    /// One delay, `P` and `Q` eliminated by substitution.
    Single,
    /// Any number of delays, `P` and `Qᵢ` free with structural equalities.
    Multi,
}

/// Tunable assembly choices.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub degree_map: DegreeMap,
    /// `None` selects `1e−3 · max(1, ‖A₀‖_F)`.
    pub epsilon: Option<f64>,
    pub flatten_mode: FlattenMode,
    pub xi: XiOptions,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            degree_map: DegreeMap::default(),
            epsilon: None,
            flatten_mode: FlattenMode::JacobianCorrected,
            xi: XiOptions::default(),
        }
    }
}

/// Default strictness margin `ε = 10⁻³ · max(1, ‖A₀‖_F)`.
pub fn default_epsilon(sys: &DelaySystem) -> f64 {
    1e-3 * sys.a(0).norm().max(1.0)
}

/// An assembled feasibility program plus what is needed to read back a
/// certificate.
#[derive(Clone, Debug)]
pub struct StabilityProgram {
    pub sys: DelaySystem,
    pub degree: u32,
    pub epsilon: f64,
    pub path: AssemblyPath,
    pub options: AssemblyOptions,
    pub problem: SdpProblem,
    /// The Lyapunov operator `{P, Qᵢ, Sᵢ, R_ij}` in terms of decision variables.
    pub operator: CompleteQuadOp,
    /// `{M, N}` and `{D, E}` as assembled from the operator (before the cone
    /// and spacing terms), kept for assembly checks.
    pub positivity_side: MultKernelOp,
    pub derivative_side: MultKernelOp,
}

/// Picks the single-delay path for `K = 1` and the multi-delay path otherwise.
pub fn assemble(sys: &DelaySystem, d: u32, options: &AssemblyOptions) -> Result<StabilityProgram> {
    if sys.k() == 1 {
        assemble_single(sys, d, options)
    } else {
        assemble_multi(sys, d, options)
    }
}

pub fn assemble_single(
    sys: &DelaySystem,
    d: u32,
    options: &AssemblyOptions,
) -> Result<StabilityProgram> {
    if sys.k() != 1 {
        return Err(Error::InvalidArgument(format!(
            "single-delay assembly needs K = 1, got {}",
            sys.k()
        )));
    }
    let n = sys.n();
    let tau = sys.horizon();
    let eps = options.epsilon.unwrap_or_else(|| default_epsilon(sys));
    let mut problem = SdpProblem::new();
    let op = make_free_operator_with(
        &mut problem,
        n,
        sys.grid(),
        options.degree_map.operator_shape(d, true),
    )?;

    // {M, N} = flatten{τ(R(0,0)+S(0)), R(0,s), S, R} − εI
    let positivity = op.flatten(options.flatten_mode)?;
    let m_side = subtract_identity(&positivity, eps)?;

    // {D, E}: D0 with ε on its leading block, τV, τṠ + εI, E
    let der = derivative_op_single(sys, &op.s[0], &op.r[0])?;
    let dop = CompleteQuadOp {
        grid: sys.grid().clone(),
        m: 2 * n,
        n,
        p: der.d0.add(&leading_identity(2 * n, n, eps))?,
        q: vec![der.v.clone()],
        s: vec![der.sdot.add(&MatrixPoly::identity(n).scale(eps / tau))?],
        r: vec![der.e.clone()],
        structural_constraints: Vec::new(),
    };
    let derivative = dop.flatten(options.flatten_mode)?;

    finish(&mut problem, &m_side, &derivative.neg(), d, options)?;
    Ok(StabilityProgram {
        sys: sys.clone(),
        degree: d,
        epsilon: eps,
        path: AssemblyPath::Single,
        options: *options,
        problem,
        operator: op,
        positivity_side: m_side,
        derivative_side: derivative,
    })
}

pub fn assemble_multi(
    sys: &DelaySystem,
    d: u32,
    options: &AssemblyOptions,
) -> Result<StabilityProgram> {
    let n = sys.n();
    let eps = options.epsilon.unwrap_or_else(|| default_epsilon(sys));
    let mut problem = SdpProblem::new();
    let op = make_free_operator_with(
        &mut problem,
        n,
        sys.grid(),
        options.degree_map.operator_shape(d, false),
    )?;
    problem.add_equalities(op.structural_constraints.iter().cloned());

    // {M₀, N₀} = L₁(P − εI, Qᵢ, Sᵢ − εI, R_ij);  M = M₀ − εI
    let eye = MatrixPoly::identity(n).scale(eps);
    let mut shifted = op.clone();
    shifted.p = op.p.sub(&eye)?;
    shifted.s = op.s.iter().map(|s| s.sub(&eye)).collect::<Result<_>>()?;
    shifted.structural_constraints.clear();
    let m_side = subtract_identity(&shifted.flatten(options.flatten_mode)?, eps)?;

    // {D₀, E₀} = L₁(D₁ + ε(Iₙ ⊕ 0), Vᵢ, Ṡᵢ + εI, G_ij)
    let derivative = derivative_op_multi(sys, &op)?
        .to_complete_op(sys, eps)?
        .flatten(options.flatten_mode)?;

    finish(&mut problem, &m_side, &derivative.neg(), d, options)?;
    Ok(StabilityProgram {
        sys: sys.clone(),
        degree: d,
        epsilon: eps,
        path: AssemblyPath::Multi,
        options: *options,
        problem,
        operator: op,
        positivity_side: m_side,
        derivative_side: derivative,
    })
}

fn leading_identity(m: usize, n: usize, c: f64) -> MatrixPoly {
    let mut a = DMatrix::zeros(m, m);
    a.view_mut((0, 0), (n, n)).fill_with_identity();
    MatrixPoly::from_matrix(&(a * c))
}

fn subtract_identity(op: &MultKernelOp, c: f64) -> Result<MultKernelOp> {
    let eye = MatrixPoly::identity(op.dim()).scale(c);
    let mut out = op.clone();
    for p in &mut out.mult.pieces {
        *p = p.sub(&eye)?;
    }
    Ok(out)
}

/// Adds spacing and a cone member to each side and equates them:
/// `side + {F, H} = {M_Ξ, N_Ξ}`.
fn finish(
    problem: &mut SdpProblem,
    positive: &MultKernelOp,
    negated_derivative: &MultKernelOp,
    d: u32,
    options: &AssemblyOptions,
) -> Result<()> {
    let xi_degree = options.degree_map.xi_degree(d);
    let n = positive.dim() / 2;
    for (side, finite_dim) in [
        (positive, n),
        (negated_derivative, negated_derivative.dim() - n),
    ] {
        let grid = side.grid().clone();
        let xi = make_xi_member(problem, xi_degree, side.dim(), &grid, options.xi)?;
        let k_degree = max_degree_1d(&xi.op).max(max_degree_1d(side));
        let params = SpacingParams {
            k_degree,
            l_support: BivariateSupport::Total(2 * xi_degree),
            tied: true,
        };
        let spacing = spacing_make(problem, finite_dim, n, &grid, params)?;
        problem.add_equalities(spacing.constraints);
        let lhs = side.add_scaled(&spacing.op, 1.0)?;
        problem.add_equalities(symmetric_equalities(&lhs, &xi.op)?);
    }
    Ok(())
}

fn max_degree_1d(op: &MultKernelOp) -> u32 {
    op.mult
        .pieces
        .iter()
        .filter_map(MatrixPoly::degree)
        .max()
        .unwrap_or(0)
}

/// Coefficient equalities `a = b` for two self-adjoint multiplier/kernel
/// pairs, emitting each symmetric pair of coefficients once.
pub fn symmetric_equalities(a: &MultKernelOp, b: &MultKernelOp) -> Result<Vec<LinearEquation>> {
    let k = a.grid().len();
    let mut out = Vec::new();
    let mut push = |diff: &MatrixPoly, keep: &dyn Fn(Monomial, usize, usize) -> bool| {
        let cols = diff.cols();
        for (mono, coef) in diff.terms() {
            for (idx, c) in coef.iter().enumerate() {
                let (r, col) = (idx / cols, idx % cols);
                if c.is_zero() || !keep(*mono, r, col) {
                    continue;
                }
                out.push(LinearEquation::from_affine_zero(c));
            }
        }
    };
    for i in 0..k {
        let diff = a.mult.pieces[i].sub(&b.mult.pieces[i])?;
        push(&diff, &|_, r, c| r <= c);
    }
    for i in 0..k {
        for j in i..k {
            let diff = a.kernel.piece(i, j).sub(b.kernel.piece(i, j))?;
            if i < j {
                push(&diff, &|_, _, _| true);
            } else {
                push(&diff, &|m, r, c| {
                    (m.s, m.theta, r, c) <= (m.theta, m.s, c, r)
                });
            }
        }
    }
    Ok(out)
}
