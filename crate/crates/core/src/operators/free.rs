//! Fresh decision-variable polynomials with built-in symmetry.

use crate::polyalg::{AffineScalar, MatrixPoly, Monomial, VarId};
use crate::sdp::SdpProblem;

/// Source of fresh scalar decision variables.
pub trait VarAllocator {
    fn new_var(&mut self) -> VarId;
}

impl VarAllocator for SdpProblem {
    fn new_var(&mut self) -> VarId {
        self.new_free_var()
    }
}

/// A bare counter, for building operators outside an SDP.
#[derive(Clone, Debug, Default)]
pub struct VarCounter(pub u32);

impl VarAllocator for VarCounter {
    fn new_var(&mut self) -> VarId {
        self.0 += 1;
        VarId(self.0 - 1)
    }
}

/// Monomial support of a bivariate polynomial; both shapes are symmetric
/// under `s ↔ θ`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BivariateSupport {
    /// `deg_s ≤ d` and `deg_θ ≤ d`.
    PerVariable(u32),
    /// `deg_s + deg_θ ≤ d`.
    Total(u32),
}

impl BivariateSupport {
    pub fn monomials(self) -> Vec<Monomial> {
        let mut out = Vec::new();
        match self {
            BivariateSupport::PerVariable(d) => {
                for a in 0..=d {
                    for b in 0..=d {
                        out.push(Monomial::new(a, b));
                    }
                }
            }
            BivariateSupport::Total(d) => {
                for a in 0..=d {
                    for b in 0..=d - a {
                        out.push(Monomial::new(a, b));
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Largest exponent of a single variable.
    pub fn max_single_degree(self) -> u32 {
        match self {
            BivariateSupport::PerVariable(d) | BivariateSupport::Total(d) => d,
        }
    }
}

fn fresh(alloc: &mut dyn VarAllocator) -> AffineScalar {
    AffineScalar::var(alloc.new_var())
}

/// Symmetric `n × n` matrix of fresh variables (row-major).
pub fn free_symmetric_matrix(alloc: &mut dyn VarAllocator, n: usize) -> Vec<AffineScalar> {
    let mut c = vec![AffineScalar::ZERO; n * n];
    for r in 0..n {
        for col in r..n {
            let v = fresh(alloc);
            c[r * n + col] = v.clone();
            c[col * n + r] = v;
        }
    }
    c
}

/// `rows × cols` polynomial in `s` of degree ≤ `degree`, all coefficients fresh.
pub fn free_poly_1d(
    alloc: &mut dyn VarAllocator,
    rows: usize,
    cols: usize,
    degree: u32,
) -> MatrixPoly {
    let terms = (0..=degree).map(|k| {
        let c = (0..rows * cols).map(|_| fresh(alloc)).collect();
        (Monomial::new(k, 0), c)
    });
    MatrixPoly::from_terms(rows, cols, terms.collect::<Vec<_>>())
}

/// Symmetric-valued `n × n` polynomial in `s`.
pub fn free_symmetric_poly_1d(alloc: &mut dyn VarAllocator, n: usize, degree: u32) -> MatrixPoly {
    let terms: Vec<_> = (0..=degree)
        .map(|k| (Monomial::new(k, 0), free_symmetric_matrix(alloc, n)))
        .collect();
    MatrixPoly::from_terms(n, n, terms)
}

/// `rows × cols` polynomial in `(s, θ)` over `support`, all coefficients fresh.
pub fn free_poly_2d(
    alloc: &mut dyn VarAllocator,
    rows: usize,
    cols: usize,
    support: BivariateSupport,
) -> MatrixPoly {
    let terms: Vec<_> = support
        .monomials()
        .into_iter()
        .map(|m| (m, (0..rows * cols).map(|_| fresh(alloc)).collect()))
        .collect();
    MatrixPoly::from_terms(rows, cols, terms)
}

/// Transpose of a kernel with its arguments exchanged: `R(θ, s)ᵀ`.
pub fn adjoint_kernel(r: &MatrixPoly) -> MatrixPoly {
    r.swap_vars().transpose()
}

/// A `K × K` family (row-major) of `n × n` kernels with
/// `R_ij(s,θ) = R_ji(θ,s)ᵀ` enforced by sharing variables.
pub fn free_symmetric_kernel_family(
    alloc: &mut dyn VarAllocator,
    n: usize,
    k: usize,
    support: BivariateSupport,
) -> Vec<MatrixPoly> {
    let mut fam = vec![MatrixPoly::zeros(n, n); k * k];
    let monos = support.monomials();
    for i in 0..k {
        // Diagonal piece: coefficient (a,b,r,c) ≡ (b,a,c,r).
        let mut slots: std::collections::HashMap<(u32, u32, usize, usize), AffineScalar> =
            std::collections::HashMap::new();
        let mut terms = Vec::new();
        for &m in &monos {
            let mut c = Vec::with_capacity(n * n);
            for r in 0..n {
                for col in 0..n {
                    let key = (m.s, m.theta, r, col);
                    let mirror = (m.theta, m.s, col, r);
                    let canon = key.min(mirror);
                    let v = slots.entry(canon).or_insert_with(|| fresh(alloc)).clone();
                    c.push(v);
                }
            }
            terms.push((m, c));
        }
        fam[i * k + i] = MatrixPoly::from_terms(n, n, terms);
        for j in i + 1..k {
            let rij = free_poly_2d(alloc, n, n, support);
            fam[j * k + i] = adjoint_kernel(&rij);
            fam[i * k + j] = rij;
        }
    }
    fam
}
