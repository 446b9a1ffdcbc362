//! Gram parameterisation of piecewise multiplier/kernel operators that are
//! positive on `L₂[−τ_K, 0]`.
//!
//! For each interval `l` a PSD matrix `Q⁽ˡ⁾` and a weight `g_l ≥ 0` on that
//! interval define
//!
//! ```text
//!   ⟨x, P_{M,N} x⟩ = Σ_l ∫_l g_l(ω) w(ω)ᵀ Q⁽ˡ⁾ w(ω) dω ≥ 0,
//!   w(ω) = [ (Y_d(ω) ⊗ Iₙ) x(ω) ;  (∫_j (Z_d(ω,θ) ⊗ Iₙ) x(θ) dθ)_{j=1..K} ],
//! ```
//!
//! with `Y_d = (1, s, …, s^d)` and `Z_d` the monomials of total degree `≤ d`.

use crate::error::Result;
use crate::operators::MultKernelOp;
use crate::polyalg::{
    IntervalGrid, MatrixPoly, MatrixPolyBuilder, Monomial, PiecewisePoly1D, PiecewisePoly2D, VarId,
};
use crate::sdp::{BlockHandle, SdpProblem};

/// `[1, s, …, s^d]`.
pub fn monomial_basis(d: u32) -> Vec<Monomial> {
    (0..=d).map(|k| Monomial::new(k, 0)).collect()
}

/// All `s^a θ^b` with `a + b ≤ d`, in graded-lex order.
pub fn bivariate_basis(d: u32) -> Vec<Monomial> {
    let mut v = Vec::new();
    for deg in 0..=d {
        for a in (0..=deg).rev() {
            v.push(Monomial::new(a, deg - a));
        }
    }
    v
}

/// Basis sizes for degree `d`, block dimension `n`, `K` intervals.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BasisDescriptor {
    pub d: u32,
    pub n: usize,
    pub k: usize,
}

impl BasisDescriptor {
    pub fn new(d: u32, n: usize, k: usize) -> Self {
        BasisDescriptor { d, n, k }
    }

    /// `|Y_d| = d + 1`.
    pub fn y_len(&self) -> usize {
        self.d as usize + 1
    }

    /// `q = (d+1)(d+2)/2 = |Z_d|`.
    pub fn q(&self) -> usize {
        (self.d as usize + 1) * (self.d as usize + 2) / 2
    }

    /// Rows of the multiplier part of `w`: `n(d+1)`.
    pub fn y1_dim(&self) -> usize {
        self.n * self.y_len()
    }

    /// Rows of the integral part of `w`: `nqK`.
    pub fn y2_dim(&self) -> usize {
        self.n * self.q() * self.k
    }

    fn y1_index(&self, k: usize, r: usize) -> usize {
        k * self.n + r
    }

    fn y2_index(&self, j: usize, gamma: usize, r: usize) -> usize {
        self.y1_dim() + j * self.n * self.q() + gamma * self.n + r
    }
}

/// Per-interval Gram blocks of one weight family.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCertificate {
    pub desc: BasisDescriptor,
    /// One PSD block per interval.
    pub blocks: Vec<BlockHandle>,
    /// `false`: each block is `[[Q₁₁, Q₁₂], [Q₁₂ᵀ, Q₂₂]]`; `true`: only `Q₁₁`.
    pub reduced: bool,
}

impl GramCertificate {
    /// Registers one PSD block per interval in `problem`.
    pub fn allocate(
        problem: &mut SdpProblem,
        desc: BasisDescriptor,
        reduced: bool,
    ) -> Result<Self> {
        let size = if reduced {
            desc.y1_dim()
        } else {
            desc.y1_dim() + desc.y2_dim()
        };
        let blocks = (0..desc.k)
            .map(|_| problem.add_psd_block(size))
            .collect::<Result<_>>()?;
        Ok(GramCertificate {
            desc,
            blocks,
            reduced,
        })
    }
}

/// Weight applied to each interval's Gram block.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Weight {
    /// `g_l = 1`.
    One,
    /// `g_l(s) = −(s + τ_l)(s + τ_{l−1})`, nonnegative on interval `l`.
    Interval,
}

impl Weight {
    /// The weight of interval `l` as a scalar polynomial in `s`.
    pub fn polynomial(self, grid: &IntervalGrid, l: usize) -> MatrixPoly {
        match self {
            Weight::One => MatrixPoly::scalar_constant(1.0),
            Weight::Interval => {
                let (a, b) = (grid.tau(l), grid.tau_before(l));
                let poly = [
                    (Monomial::new(2, 0), -1.0),
                    (Monomial::new(1, 0), -(a + b)),
                    (Monomial::ONE, -a * b),
                ];
                poly.iter().fold(MatrixPoly::zeros(1, 1), |acc, &(m, c)| {
                    acc.add(&MatrixPoly::scalar_monomial(m, c))
                        .expect("scalar shapes agree")
                })
            }
        }
    }
}

/// Numeric coefficients of a scalar polynomial in `s`: `(exponent, coef)`.
fn scalar_coeffs(g: &MatrixPoly) -> Vec<(u32, f64)> {
    g.terms()
        .map(|(m, c)| (m.s, c[0].constant_part()))
        .collect()
}

/// `∫_a^b g(ω) ω^p dω`.
fn weighted_moment(g: &[(u32, f64)], p: u32, a: f64, b: f64) -> f64 {
    g.iter()
        .map(|&(e, c)| {
            let k = (e + p + 1) as i32;
            c * (b.powi(k) - a.powi(k)) / f64::from(k as u32)
        })
        .sum()
}

/// Expands a Gram certificate into the multiplier/kernel pair it represents.
pub fn expand_gram(
    problem: &SdpProblem,
    cert: &GramCertificate,
    weights: &[MatrixPoly],
    grid: &IntervalGrid,
) -> Result<MultKernelOp> {
    let desc = cert.desc;
    let (n, k, dy) = (desc.n, desc.k, desc.y_len());
    let ybasis = monomial_basis(desc.d);
    let zbasis = bivariate_basis(desc.d);
    let var = |l: usize, a: usize, b: usize| -> VarId { problem.entry(cert.blocks[l], a, b) };

    let mut mult = Vec::with_capacity(k);
    for l in 0..k {
        let mut bld = MatrixPolyBuilder::new(n, n);
        for ka in 0..dy {
            for kb in 0..dy {
                let mono = ybasis[ka].times(ybasis[kb]);
                for r in 0..n {
                    for c in 0..n {
                        bld.add_var(
                            mono,
                            r,
                            c,
                            var(l, desc.y1_index(ka, r), desc.y1_index(kb, c)),
                            1.0,
                        );
                    }
                }
            }
        }
        mult.push(bld.finish().mul_scalar_poly(&weights[l])?);
    }

    let mut kern = vec![MatrixPoly::zeros(n, n); k * k];
    if !cert.reduced {
        let gcoef: Vec<Vec<(u32, f64)>> = weights.iter().map(scalar_coeffs).collect();
        for i in 0..k {
            for j in 0..k {
                // g_i(s) Y(s)ᵀ Q⁽ⁱ⁾₁₂ Z(s,θ)
                let mut t1 = MatrixPolyBuilder::new(n, n);
                // g_j(θ) Z(θ,s)ᵀ Q⁽ʲ⁾₂₁ Y(θ)
                let mut t2 = MatrixPolyBuilder::new(n, n);
                for (ka, ym) in ybasis.iter().enumerate() {
                    for (g, zm) in zbasis.iter().enumerate() {
                        let m1 = ym.times(*zm);
                        let m2 = Monomial::new(zm.theta, ym.s + zm.s);
                        for r in 0..n {
                            for c in 0..n {
                                t1.add_var(
                                    m1,
                                    r,
                                    c,
                                    var(i, desc.y1_index(ka, r), desc.y2_index(j, g, c)),
                                    1.0,
                                );
                                t2.add_var(
                                    m2,
                                    r,
                                    c,
                                    var(j, desc.y2_index(i, g, r), desc.y1_index(ka, c)),
                                    1.0,
                                );
                            }
                        }
                    }
                }
                let t1 = t1.finish().mul_scalar_poly(&weights[i])?;
                let t2 = t2.finish().mul_scalar_poly(&weights[j].swap_vars())?;
                // Σ_l ∫_l g_l(ω) Z(ω,s)ᵀ Q⁽ˡ⁾₂₂ Z(ω,θ) dω
                let mut t3 = MatrixPolyBuilder::new(n, n);
                for l in 0..k {
                    let (a, b) = grid.interval(l);
                    for (ga, za) in zbasis.iter().enumerate() {
                        for (gb, zb) in zbasis.iter().enumerate() {
                            let w = weighted_moment(&gcoef[l], za.s + zb.s, a, b);
                            let mono = Monomial::new(za.theta, zb.theta);
                            for r in 0..n {
                                for c in 0..n {
                                    let id =
                                        var(l, desc.y2_index(i, ga, r), desc.y2_index(j, gb, c));
                                    t3.add_var(mono, r, c, id, w);
                                }
                            }
                        }
                    }
                }
                kern[i * k + j] = t1.add(&t2)?.add(&t3.finish())?;
            }
        }
    }
    MultKernelOp::new(
        PiecewisePoly1D::new(grid.clone(), mult)?,
        PiecewisePoly2D::new(grid.clone(), kern)?,
    )
}

/// Options for [`make_xi_member`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct XiOptions {
    /// Keep only `Q₁₁` in the certificate with the interval weight.
    pub reduced_second_block: bool,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions {
            reduced_second_block: true,
        }
    }
}

/// A member of the positive cone: the sum of the expansions for `g = 1` and
/// for the interval weight.
#[derive(Clone, Debug, PartialEq)]
pub struct XiMember {
    pub op: MultKernelOp,
    pub certificates: [GramCertificate; 2],
}

pub fn make_xi_member(
    problem: &mut SdpProblem,
    d: u32,
    n: usize,
    grid: &IntervalGrid,
    options: XiOptions,
) -> Result<XiMember> {
    let desc = BasisDescriptor::new(d, n, grid.len());
    let c1 = GramCertificate::allocate(problem, desc, false)?;
    let c2 = GramCertificate::allocate(problem, desc, options.reduced_second_block)?;
    let w1: Vec<MatrixPoly> = (0..grid.len())
        .map(|l| Weight::One.polynomial(grid, l))
        .collect();
    let w2: Vec<MatrixPoly> = (0..grid.len())
        .map(|l| Weight::Interval.polynomial(grid, l))
        .collect();
    let op = expand_gram(problem, &c1, &w1, grid)?
        .add_scaled(&expand_gram(problem, &c2, &w2, grid)?, 1.0)?;
    Ok(XiMember {
        op,
        certificates: [c1, c2],
    })
}
