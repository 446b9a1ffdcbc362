//! Randomised invariant checks, evaluated numerically by pointwise
//! polynomial evaluation and Gauss–Legendre quadrature (never through the
//! symbolic integration used during assembly).
//!
//! | check | statement | tolerance |
//! |-------|-----------|-----------|
//! | `self_adjointness` | `⟨y, Px⟩_Z = ⟨Py, x⟩_Z` | rel. `1e−9` |
//! | `structure_preservation` | `φᵢ(0) = x ⇒ ψᵢ(0) = y` | rel. `1e−10` |
//! | `l1_correspondence` | `⟨x, Px⟩_Z = ⟨x̂, P_{M,N} x̂⟩_{L₂}` | rel. `1e−8` |
//! | `spacing_annihilation` | `⟨z, T z⟩ = 0` on `ℝᵐ × L₂ⁿ` | abs. `1e−9` |
//! | `gram_pointwise` | expanded `{M, N}` equals the Gram formula | rel. `1e−10` |
//! | `xi_positivity` | `⟨x, P_{M,N} x⟩ ≥ 0` for cone members | `≥ −1e−9` |
//! | `single_multi_consistency` | both derivative constructions agree at `K = 1` | abs. `1e−12` |

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{
    derivative_op_multi, derivative_op_single, make_free_operator_with, spacing_make,
    BivariateSupport, CompleteQuadOp, DelaySystem, FlattenMode, MultKernelOp, OperatorShape,
    SpacingParams, VarCounter,
};
use crate::polyalg::{IntervalGrid, LinearEquation, MatrixPoly, Monomial, Var};
use crate::quadrature::GaussLegendre;
use crate::sdp::SdpProblem;
use crate::soscone::{
    bivariate_basis, expand_gram, make_xi_member, monomial_basis, GramCertificate, Weight,
    XiOptions,
};

/// Outcome of one invariant check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Number of randomised instances evaluated.
    pub cases: usize,
    /// Worst observed violation in the check's own metric.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, cases: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        CheckOutcome {
            name,
            passed: worst <= tolerance,
            cases,
            worst,
            tolerance,
            detail,
        }
    }
}

/// Sizes of the randomised suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Random operators for the self-adjointness check.
    pub adjoint_ops: usize,
    /// Random states for the flattening check (split over `K ∈ {1,2,3}`).
    pub l1_states: usize,
    /// Random `z` per `(m, n, K)` case of the spacing check.
    pub spacing_states: usize,
    /// Random `(s, θ)` points per Gram expansion.
    pub gram_points: usize,
    /// Random functions per `(d, K)` case of the positivity check.
    pub positivity_functions: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 0x5eed,
            adjoint_ops: 50,
            l1_states: 100,
            spacing_states: 50,
            gram_points: 20,
            positivity_functions: 100,
        }
    }
}

const QUAD_POINTS: usize = 32;
const NO_VARS: [f64; 0] = [];

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn random_taus(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut t = 0.0;
    (0..k)
        .map(|_| {
            t += rng.random_range(0.3..1.5);
            t
        })
        .collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Random numeric `rows × 1` polynomial in `s` of degree `deg`.
fn random_column(rng: &mut ChaCha8Rng, rows: usize, deg: u32) -> MatrixPoly {
    let mut p = MatrixPoly::zeros(rows, 1);
    for e in 0..=deg {
        let c = DMatrix::from_fn(rows, 1, |_, _| rng.random_range(-1.0..1.0));
        p = p
            .add(
                &MatrixPoly::from_matrix(&c)
                    .mul_scalar_poly(&MatrixPoly::scalar_monomial(Monomial::new(e, 0), 1.0))
                    .expect("numeric"),
            )
            .expect("shapes");
    }
    p
}

/// Random PSD matrix `B Bᵀ` (rank `rank`).
fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, rank.max(1), |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose()
}

/// Uniform random values, then the least-norm correction onto `eqs`.
fn random_feasible_assignment(
    rng: &mut ChaCha8Rng,
    nvars: usize,
    eqs: &[LinearEquation],
) -> Vec<f64> {
    let mut v: Vec<f64> = (0..nvars).map(|_| rng.random_range(-1.0..1.0)).collect();
    if eqs.is_empty() {
        return v;
    }
    let a: DMatrix<f64> = DMatrix::from_fn(eqs.len(), nvars, |r, c| {
        eqs[r]
            .terms
            .iter()
            .filter(|(id, _)| id.index() == c)
            .map(|(_, x)| *x)
            .sum()
    });
    let b = DVector::from_iterator(eqs.len(), eqs.iter().map(|e| e.rhs));
    // Least-norm corrections δ = Aᵀ(AAᵀ)⁺r, with the pseudo-inverse taken
    // from a symmetric eigendecomposition (the rows are often redundant).
    let gram: SymmetricEigen<f64, nalgebra::Dyn> = SymmetricEigen::new(&a * a.transpose());
    let cutoff = 1e-12 * gram.eigenvalues.amax().max(1.0);
    let inv = DVector::from_iterator(
        gram.eigenvalues.len(),
        gram.eigenvalues
            .iter()
            .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 }),
    );
    for _ in 0..3 {
        let r = &b - &a * DVector::from_column_slice(&v);
        let w: DVector<f64> =
            &gram.eigenvectors * inv.component_mul(&(gram.eigenvectors.transpose() * r));
        let delta: DVector<f64> = a.transpose() * w;
        for (vi, di) in v.iter_mut().zip(delta.iter()) {
            *vi += di;
        }
    }
    v
}

fn eval(p: &MatrixPoly, s: f64, t: f64) -> DMatrix<f64> {
    p.evaluate(s, t, &NO_VARS).expect("numeric polynomial")
}

/// Application of a numeric complete-quadratic operator with quadrature:
/// `(y, ψᵢ(s))` where `ψᵢ` is returned as a closure-free evaluator.
struct ZApply<'a> {
    op: &'a CompleteQuadOp,
    x: &'a DVector<f64>,
    phi: &'a [MatrixPoly],
    rule: &'a GaussLegendre,
}

impl ZApply<'_> {
    fn finite(&self) -> DVector<f64> {
        let mut y = eval(&self.op.p, 0.0, 0.0) * self.x;
        for (i, phi) in self.phi.iter().enumerate() {
            for (s, w) in self.rule.nodes_on(-self.op.grid.tau(i), 0.0) {
                y += eval(&self.op.q[i], s, 0.0) * eval(phi, s, 0.0).column(0) * w;
            }
        }
        y
    }

    fn function(&self, i: usize, s: f64) -> DVector<f64> {
        let tk = self.op.grid.horizon();
        let mut out = eval(&self.op.q[i], s, 0.0).transpose() * self.x * tk;
        out += eval(&self.op.s[i], s, 0.0) * eval(&self.phi[i], s, 0.0).column(0) * tk;
        for (j, phi) in self.phi.iter().enumerate() {
            for (t, w) in self.rule.nodes_on(-self.op.grid.tau(j), 0.0) {
                out += eval(self.op.r(i, j), s, t) * eval(phi, t, 0.0).column(0) * w;
            }
        }
        out
    }
}

/// `⟨(y, η), P(x, φ)⟩_Z` by quadrature.
fn z_form(
    op: &CompleteQuadOp,
    y: &DVector<f64>,
    eta: &[MatrixPoly],
    x: &DVector<f64>,
    phi: &[MatrixPoly],
    rule: &GaussLegendre,
) -> f64 {
    let app = ZApply { op, x, phi, rule };
    let mut acc = op.grid.horizon() * y.dot(&app.finite());
    for (i, e) in eta.iter().enumerate() {
        for (s, w) in rule.nodes_on(-op.grid.tau(i), 0.0) {
            acc += w * eval(e, s, 0.0).column(0).dot(&app.function(i, s));
        }
    }
    acc
}

/// `⟨x, P_{M,N} x⟩_{L₂}` by quadrature for a numeric operator.
pub fn l2_quadratic_form(
    op: &MultKernelOp,
    x: &dyn Fn(usize, f64) -> DVector<f64>,
    rule: &GaussLegendre,
) -> f64 {
    let grid = op.grid();
    let k = grid.len();
    let nodes: Vec<Vec<(f64, f64, DVector<f64>)>> = (0..k)
        .map(|i| {
            let (a, b) = grid.interval(i);
            rule.nodes_on(a, b).map(|(s, w)| (s, w, x(i, s))).collect()
        })
        .collect();
    let mut acc = 0.0;
    for i in 0..k {
        for (s, w, xs) in &nodes[i] {
            let mut v = eval(&op.mult.pieces[i], *s, 0.0) * xs;
            for j in 0..k {
                for (t, wt, xt) in &nodes[j] {
                    v += eval(op.kernel.piece(i, j), *s, *t) * xt * *wt;
                }
            }
            acc += w * xs.dot(&v);
        }
    }
    acc
}

fn random_operator(rng: &mut ChaCha8Rng, n: usize, taus: &[f64], d: u32) -> Result<CompleteQuadOp> {
    let grid = IntervalGrid::new(taus)?;
    let mut alloc = VarCounter::default();
    let shape = OperatorShape {
        s_degree: d,
        r_support: BivariateSupport::PerVariable(d),
        eliminate_single_delay: false,
    };
    let op = make_free_operator_with(&mut alloc, n, &grid, shape)?;
    let values = random_feasible_assignment(rng, alloc.0 as usize, &op.structural_constraints);
    op.instantiate(&values)
}

/// `⟨y, Px⟩_Z = ⟨Py, x⟩_Z` for random constrained operators.
pub fn self_adjointness(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa1);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let mut worst: f64 = 0.0;
    for c in 0..cfg.adjoint_ops {
        let k = 1 + c % 3;
        let n = 1 + c % 2;
        let taus = random_taus(&mut rng, k);
        let op = random_operator(&mut rng, n, &taus, 2)?;
        let (x, y) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
        let phi: Vec<MatrixPoly> = (0..k).map(|_| random_column(&mut rng, n, 3)).collect();
        let eta: Vec<MatrixPoly> = (0..k).map(|_| random_column(&mut rng, n, 3)).collect();
        let lhs = z_form(&op, &y, &eta, &x, &phi, &rule);
        let rhs = z_form(&op, &x, &phi, &y, &eta, &rule);
        worst = worst.max(rel_err(lhs, rhs));
    }
    Ok(CheckOutcome::new(
        "self_adjointness",
        cfg.adjoint_ops,
        worst,
        1e-9,
        "random operators, K ∈ {1,2,3}".into(),
    ))
}

/// `ψᵢ(0) = y` whenever every `φᵢ(0) = x`.
pub fn structure_preservation(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb2);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let mut worst: f64 = 0.0;
    for c in 0..cfg.adjoint_ops {
        let k = 1 + c % 3;
        let n = 1 + c % 2;
        let taus = random_taus(&mut rng, k);
        let op = random_operator(&mut rng, n, &taus, 2)?;
        let x = random_vec(&mut rng, n);
        let xs = MatrixPoly::from_matrix(&DMatrix::from_column_slice(n, 1, x.as_slice()));
        let phi: Vec<MatrixPoly> = (0..k)
            .map(|_| {
                let tail = random_column(&mut rng, n, 2)
                    .mul_scalar_poly(&MatrixPoly::variable(Var::S))
                    .expect("numeric");
                xs.add(&tail).expect("shapes")
            })
            .collect();
        let app = ZApply {
            op: &op,
            x: &x,
            phi: &phi,
            rule: &rule,
        };
        let y = app.finite();
        for i in 0..k {
            let psi0 = app.function(i, 0.0);
            let scale = y.amax().max(psi0.amax()).max(1.0);
            worst = worst.max((psi0 - &y).amax() / scale);
        }
    }
    Ok(CheckOutcome::new(
        "structure_preservation",
        cfg.adjoint_ops,
        worst,
        1e-10,
        "φᵢ(0) = x".into(),
    ))
}

/// Quadratic forms agree before and after flattening (Jacobian-corrected).
pub fn l1_correspondence(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xc3);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let mut worst: f64 = 0.0;
    let mut op = None;
    for c in 0..cfg.l1_states {
        let k = 1 + c % 3;
        let n = 2;
        if c % 3 == 0
            || op
                .as_ref()
                .map(|(o, _): &(CompleteQuadOp, MultKernelOp)| o.k())
                != Some(k)
        {
            let taus = random_taus(&mut rng, k);
            let o = random_operator(&mut rng, n, &taus, 2)?;
            let flat = o.flatten(FlattenMode::JacobianCorrected)?;
            op = Some((o, flat));
        }
        let (o, flat) = op.as_ref().expect("set above");
        let x = random_vec(&mut rng, n);
        let phi: Vec<MatrixPoly> = (0..k).map(|_| random_column(&mut rng, n, 3)).collect();
        let zq = z_form(o, &x, &phi, &x, &phi, &rule);
        let grid = &o.grid;
        let xhat = |i: usize, s: f64| {
            let a = grid.width(i) / grid.tau(i);
            let rho = (s + grid.tau_before(i)) / a;
            let mut v = DVector::zeros(2 * n);
            v.rows_mut(0, n).copy_from(&x);
            v.rows_mut(n, n)
                .copy_from(&eval(&phi[i], rho, 0.0).column(0));
            v
        };
        let lq = l2_quadratic_form(flat, &xhat, &rule);
        worst = worst.max(rel_err(zq, lq));
    }
    Ok(CheckOutcome::new(
        "l1_correspondence",
        cfg.l1_states,
        worst,
        1e-8,
        "K ∈ {1,2,3}, degree-2 operators".into(),
    ))
}

/// `⟨z, T z⟩ = 0` for random spacing operators and `z = (c, y)`.
pub fn spacing_annihilation(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd4);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let cases = [
        (1, 1, 1),
        (2, 1, 2),
        (1, 2, 2),
        (3, 2, 1),
        (2, 2, 3),
        (4, 2, 2),
    ];
    let mut worst: f64 = 0.0;
    for (idx, &(m, n, k)) in cases.iter().enumerate() {
        let grid = IntervalGrid::new(&random_taus(&mut rng, k))?;
        let mut alloc = VarCounter::default();
        let params = SpacingParams {
            tied: idx % 2 == 1,
            ..SpacingParams::uniform(2)
        };
        let sp = spacing_make(&mut alloc, m, n, &grid, params)?;
        let values = random_feasible_assignment(&mut rng, alloc.0 as usize, &sp.constraints);
        let op = sp.op.instantiate(&values)?;
        for _ in 0..cfg.spacing_states {
            let c = random_vec(&mut rng, m);
            let y: Vec<MatrixPoly> = (0..k).map(|_| random_column(&mut rng, n, 3)).collect();
            let z = |i: usize, s: f64| {
                let mut v = DVector::zeros(m + n);
                v.rows_mut(0, m).copy_from(&c);
                v.rows_mut(m, n).copy_from(&eval(&y[i], s, 0.0).column(0));
                v
            };
            worst = worst.max(l2_quadratic_form(&op, &z, &rule).abs());
        }
    }
    Ok(CheckOutcome::new(
        "spacing_annihilation",
        cases.len() * cfg.spacing_states,
        worst,
        1e-9,
        "(m, n, K) ∈ {(1,1,1), (2,1,2), (1,2,2), (3,2,1), (2,2,3), (4,2,2)}".into(),
    ))
}

/// Assigns a random PSD matrix to every block of `cert`.
fn assign_certificate(
    rng: &mut ChaCha8Rng,
    problem: &SdpProblem,
    cert: &GramCertificate,
    values: &mut [f64],
) -> Vec<DMatrix<f64>> {
    cert.blocks
        .iter()
        .map(|&h| {
            let size = problem.block(h).size;
            let rank = rng.random_range(1..=size);
            let q = random_psd(rng, size, rank);
            for i in 0..size {
                for j in i..size {
                    values[problem.entry(h, i, j).index()] = q[(i, j)];
                }
            }
            q
        })
        .collect()
}

/// `(Y_d(s) ⊗ Iₙ)`, an `n(d+1) × n` matrix.
fn y_mat(d: u32, n: usize, s: f64) -> DMatrix<f64> {
    let basis = monomial_basis(d);
    let mut m = DMatrix::zeros(n * basis.len(), n);
    for (k, mono) in basis.iter().enumerate() {
        for r in 0..n {
            m[(k * n + r, r)] = mono.eval(s, 0.0);
        }
    }
    m
}

/// `(Z_d(a, b) ⊗ Iₙ)`, an `nq × n` matrix.
fn z_mat(d: u32, n: usize, a: f64, b: f64) -> DMatrix<f64> {
    let basis = bivariate_basis(d);
    let mut m = DMatrix::zeros(n * basis.len(), n);
    for (g, mono) in basis.iter().enumerate() {
        for r in 0..n {
            m[(g * n + r, r)] = mono.eval(a, b);
        }
    }
    m
}

/// Direct evaluation of the Gram formula for one certificate.
#[allow(clippy::too_many_arguments)]
fn gram_direct(
    qs: &[DMatrix<f64>],
    d: u32,
    n: usize,
    grid: &IntervalGrid,
    weight: Weight,
    reduced: bool,
    rule: &GaussLegendre,
    (i, j, s, t): (usize, usize, f64, f64),
) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = grid.len();
    let g = |l: usize, x: f64| eval(&weight.polynomial(grid, l), x, 0.0)[(0, 0)];
    let y1 = n * (d as usize + 1);
    let nq = n * bivariate_basis(d).len();
    let ys = y_mat(d, n, s);
    let m = (ys.transpose() * qs[i].view((0, 0), (y1, y1)) * &ys) * g(i, s);
    if reduced {
        return (m, DMatrix::zeros(n, n));
    }
    let q12 = |l: usize, blk: usize| qs[l].view((0, y1 + blk * nq), (y1, nq)).into_owned();
    let q22 = |l: usize, a: usize, b: usize| {
        qs[l]
            .view((y1 + a * nq, y1 + b * nq), (nq, nq))
            .into_owned()
    };
    let mut nmat = ys.transpose() * q12(i, j) * z_mat(d, n, s, t) * g(i, s);
    let yt = y_mat(d, n, t);
    nmat += z_mat(d, n, t, s).transpose() * q12(j, i).transpose() * &yt * g(j, t);
    for l in 0..k {
        let (a, b) = grid.interval(l);
        for (w, wt) in rule.nodes_on(a, b) {
            nmat +=
                z_mat(d, n, w, s).transpose() * q22(l, i, j) * z_mat(d, n, w, t) * (g(l, w) * wt);
        }
    }
    (m, nmat)
}

/// Expanded Gram certificates match the Gram formula pointwise.
pub fn gram_pointwise(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe5);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in 0..=2u32 {
        for k in 1..=2usize {
            for (weight, reduced) in [
                (Weight::One, false),
                (Weight::Interval, false),
                (Weight::Interval, true),
            ] {
                let n = 2;
                let grid = IntervalGrid::new(&random_taus(&mut rng, k))?;
                let mut problem = SdpProblem::new();
                let desc = crate::soscone::BasisDescriptor::new(d, n, k);
                let cert = GramCertificate::allocate(&mut problem, desc, reduced)?;
                let weights: Vec<MatrixPoly> =
                    (0..k).map(|l| weight.polynomial(&grid, l)).collect();
                let op = expand_gram(&problem, &cert, &weights, &grid)?;
                let mut values = vec![0.0; problem.num_vars()];
                let qs = assign_certificate(&mut rng, &problem, &cert, &mut values);
                let op = op.instantiate(&values)?;
                for _ in 0..cfg.gram_points {
                    let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
                    let (a, b) = grid.interval(i);
                    let s = rng.random_range(a..b);
                    let (a, b) = grid.interval(j);
                    let t = rng.random_range(a..b);
                    let (m_ref, n_ref) =
                        gram_direct(&qs, d, n, &grid, weight, reduced, &rule, (i, j, s, t));
                    let m_got = eval(&op.mult.pieces[i], s, 0.0);
                    let n_got = eval(op.kernel.piece(i, j), s, t);
                    let scale = m_ref.amax().max(n_ref.amax()).max(1.0);
                    worst = worst
                        .max((m_got - m_ref).amax() / scale)
                        .max((n_got - n_ref).amax() / scale);
                    cases += 1;
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "gram_pointwise",
        cases,
        worst,
        1e-10,
        "d ∈ {0,1,2}, K ∈ {1,2}, both weights".into(),
    ))
}

/// Random cone members have nonnegative quadratic forms.
pub fn xi_positivity(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf6);
    let rule = GaussLegendre::new(QUAD_POINTS);
    let mut most_negative: f64 = 0.0;
    let mut cases = 0;
    for d in 0..=2u32 {
        for k in 1..=2usize {
            let n = 2;
            let grid = IntervalGrid::new(&random_taus(&mut rng, k))?;
            let mut problem = SdpProblem::new();
            let xi = make_xi_member(
                &mut problem,
                d,
                n,
                &grid,
                XiOptions {
                    reduced_second_block: false,
                },
            )?;
            let mut values = vec![0.0; problem.num_vars()];
            for cert in &xi.certificates {
                assign_certificate(&mut rng, &problem, cert, &mut values);
            }
            let op = xi.op.instantiate(&values)?;
            for f in 0..cfg.positivity_functions {
                let polys: Vec<MatrixPoly> =
                    (0..k).map(|_| random_column(&mut rng, n, 4)).collect();
                let (freq, phase) = (rng.random_range(0.5..6.0), rng.random_range(0.0..6.3));
                let x = |i: usize, s: f64| {
                    let mut v = eval(&polys[i], s, 0.0).column(0).into_owned();
                    if f % 2 == 1 {
                        v[0] += (freq * s + phase).sin();
                    }
                    v
                };
                most_negative = most_negative.min(l2_quadratic_form(&op, &x, &rule));
                cases += 1;
            }
        }
    }
    Ok(CheckOutcome::new(
        "xi_positivity",
        cases,
        0.0 - most_negative,
        1e-9,
        "d ∈ {0,1,2}, K ∈ {1,2}; worst = negative part of the smallest form".into(),
    ))
}

fn max_abs_coefficient(p: &MatrixPoly) -> f64 {
    p.terms()
        .flat_map(|(_, c)| c.iter())
        .map(|a| {
            a.terms()
                .iter()
                .map(|(_, v)| v.abs())
                .fold(a.constant_part().abs(), f64::max)
        })
        .fold(0.0, f64::max)
}

/// The multi-delay derivative construction reduces to the single-delay one
/// at `K = 1` once `P` and `Q` are eliminated.
pub fn single_multi_consistency(cfg: &SelftestConfig) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x17);
    let mut worst: f64 = 0.0;
    let cases = 10;
    for c in 0..cases {
        let n = 1 + c % 2;
        let a: Vec<DMatrix<f64>> = (0..2)
            .map(|_| DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0)))
            .collect();
        let sys = DelaySystem::new(a, &[rng.random_range(0.2..2.0)])?;
        let mut alloc = VarCounter::default();
        let op = make_free_operator_with(
            &mut alloc,
            n,
            sys.grid(),
            OperatorShape {
                eliminate_single_delay: true,
                ..OperatorShape::uniform(3)
            },
        )?;
        let single = derivative_op_single(&sys, &op.s[0], &op.r[0])?;
        let multi = derivative_op_multi(&sys, &op)?;
        for (x, y) in [
            (&single.d0, &multi.d1),
            (&single.v, &multi.v[0]),
            (&single.sdot, &multi.sdot[0]),
            (&single.e, &multi.g[0]),
        ] {
            if x.shape() != y.shape() {
                return Err(Error::DimensionMismatch(
                    "derivative constructions disagree in shape".into(),
                ));
            }
            worst = worst.max(max_abs_coefficient(&x.sub(y)?));
        }
    }
    Ok(CheckOutcome::new(
        "single_multi_consistency",
        cases,
        worst,
        1e-12,
        "symbolic coefficient comparison".into(),
    ))
}

/// Every check in the suite.
pub fn run_all(cfg: &SelftestConfig) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        self_adjointness(cfg)?,
        structure_preservation(cfg)?,
        l1_correspondence(cfg)?,
        spacing_annihilation(cfg)?,
        gram_pointwise(cfg)?,
        xi_positivity(cfg)?,
        single_multi_consistency(cfg)?,
    ])
}
