//! Rightmost characteristic roots of `ẋ = A₀x + Σ Aᵢ x(t − τᵢ)`.
//!
//! The generator acts on history segments `φ ∈ C([−τ_K, 0], ℝⁿ)` as
//! `φ ↦ φ'` with domain condition `φ'(0) = A₀φ(0) + Σ Aᵢ φ(−τᵢ)`. We
//! discretise `φ` at Chebyshev points on every interval `[−τᵢ, −τᵢ₋₁]`
//! (neighbouring intervals share their breakpoint), replace `d/ds` by the
//! per-interval spectral differentiation matrix and the row at `s = 0` by
//! the delay equation. The eigenvalues of the resulting matrix approximate
//! the characteristic roots; each is polished by Newton's method on
//! `det Δ(λ)` and kept only if its characteristic residual is small.

use nalgebra::{Complex, DMatrix, Schur};

use crate::dual_lmi::ParameterizedFamily;
use crate::error::{Error, Result};
use crate::operators::DelaySystem;
use crate::par::{map_slice, Parallelism};

/// Collocation intervals' default point count.
pub const DEFAULT_COLLOCATION: usize = 32;

/// Largest accepted normwise characteristic residual of a reported root.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Agreement required between the `N` and `N + 8` rightmost roots.
const REFINEMENT_TOLERANCE: f64 = 1e-6;

/// Output of [`spectral_abscissa`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    /// Accepted roots, sorted by real part (descending).
    pub roots: Vec<Complex<f64>>,
    /// Real part of the rightmost accepted root (`NaN` if none).
    pub abscissa: f64,
    /// Collocation points per interval of the reported discretisation.
    pub collocation: usize,
    /// Whether the rightmost root moved less than `1e−6` from `N` to `N + 8`.
    pub converged: bool,
}

impl SpectrumResult {
    /// Stable with confidence: converged and strictly negative abscissa.
    pub fn is_stable(&self) -> bool {
        self.converged && self.abscissa < 0.0
    }
}

/// `Δ(λ) = λI − A₀ − Σ Aᵢ e^{−λτᵢ}`.
pub fn characteristic_matrix(sys: &DelaySystem, lambda: Complex<f64>) -> DMatrix<Complex<f64>> {
    let n = sys.n();
    let mut m = DMatrix::<Complex<f64>>::identity(n, n) * lambda;
    for i in 0..=sys.k() {
        let tau = if i == 0 { 0.0 } else { sys.taus()[i - 1] };
        let e = (-lambda * tau).exp();
        m -= sys.a(i).map(|v| Complex::new(v, 0.0)) * e;
    }
    m
}

/// `σ_min(Δ(λ)) / (|λ| + Σ ‖Aᵢ‖ |e^{−λτᵢ}|)`.
pub fn characteristic_residual(sys: &DelaySystem, lambda: Complex<f64>) -> f64 {
    let delta = characteristic_matrix(sys, lambda);
    let smin = delta.singular_values().min();
    let mut scale = lambda.norm();
    for i in 0..=sys.k() {
        let tau = if i == 0 { 0.0 } else { sys.taus()[i - 1] };
        scale += sys.a(i).norm() * (-lambda.re * tau).exp();
    }
    smin / scale.max(f64::MIN_POSITIVE)
}

/// Chebyshev points `cos(πj/N)` and the differentiation matrix on `[−1, 1]`.
fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let c = |j: usize| {
        let base = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row_sum: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row_sum;
    }
    (x, d)
}

/// Discretised generator with `n_pts + 1` Chebyshev points per interval.
fn generator_matrix(sys: &DelaySystem, n_pts: usize) -> DMatrix<f64> {
    let (n, k) = (sys.n(), sys.k());
    let nodes = k * n_pts + 1;
    let (_, dref) = cheb(n_pts);
    let mut g = DMatrix::zeros(n * nodes, n * nodes);
    // Node `i·N + j` is point `j` (from the right end) of interval `i`.
    let node = |i: usize, j: usize| i * n_pts + j;
    // Boundary row: the delay equation at s = 0.
    g.view_mut((0, 0), (n, n)).copy_from(sys.a(0));
    for i in 1..=k {
        let col = node(i - 1, n_pts) * n;
        let mut blk = g.view_mut((0, col), (n, n));
        blk += sys.a(i);
    }
    for i in 0..k {
        let width = sys.grid().width(i);
        let scale = 2.0 / width;
        for j in 1..=n_pts {
            let row = node(i, j) * n;
            for jj in 0..=n_pts {
                let w = scale * dref[(j, jj)];
                if w == 0.0 {
                    continue;
                }
                let col = node(i, jj) * n;
                for r in 0..n {
                    g[(row + r, col + r)] += w;
                }
            }
        }
    }
    g
}

/// Newton on `det Δ(λ)`: `λ ← λ − 1/tr(Δ⁻¹Δ')`. Returns the polished
/// root when it stays close to the start, otherwise the start.
fn polish(sys: &DelaySystem, start: Complex<f64>) -> Complex<f64> {
    let n = sys.n();
    let mut lambda = start;
    for _ in 0..12 {
        let delta = characteristic_matrix(sys, lambda);
        let mut dprime = DMatrix::<Complex<f64>>::identity(n, n);
        for i in 1..=sys.k() {
            let tau = sys.taus()[i - 1];
            dprime += sys.a(i).map(|v| Complex::new(v, 0.0)) * ((-lambda * tau).exp() * tau);
        }
        let Some(sol) = delta.lu().solve(&dprime) else {
            break;
        };
        let tr = sol.trace();
        if tr.norm() == 0.0 || !tr.is_finite() {
            break;
        }
        let step = tr.inv();
        lambda -= step;
        if step.norm() < 1e-15 * (1.0 + lambda.norm()) {
            break;
        }
    }
    if lambda.is_finite() && (lambda - start).norm() < 1e-3 * (1.0 + start.norm()) {
        lambda
    } else {
        start
    }
}

/// Roots of one discretisation, filtered and sorted.
fn roots_at(sys: &DelaySystem, n_pts: usize) -> Result<Vec<Complex<f64>>> {
    let g = generator_matrix(sys, n_pts);
    let schur = Schur::try_new(g, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::InvalidArgument("collocation eigenvalue iteration did not converge".into())
    })?;
    let mut roots: Vec<Complex<f64>> = Vec::new();
    for ev in schur.complex_eigenvalues().iter() {
        if !ev.is_finite() || characteristic_residual(sys, *ev) > 1e-3 {
            continue;
        }
        let r = polish(sys, *ev);
        if characteristic_residual(sys, r) < RESIDUAL_TOLERANCE
            && !roots
                .iter()
                .any(|q| (q - r).norm() < 1e-8 * (1.0 + r.norm()))
        {
            roots.push(r);
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(roots)
}

fn abscissa_of(roots: &[Complex<f64>]) -> f64 {
    roots.first().map_or(f64::NAN, |r| r.re)
}

/// Rightmost characteristic roots with `n_pts ≥ 8` points per interval,
/// checked against `n_pts + 8` and refined once more if they disagree.
pub fn spectral_abscissa(sys: &DelaySystem, n_pts: usize) -> Result<SpectrumResult> {
    if n_pts < 8 {
        return Err(Error::InvalidArgument(format!(
            "collocation needs N ≥ 8, got {n_pts}"
        )));
    }
    let mut coarse = roots_at(sys, n_pts)?;
    let mut n_used = n_pts + 8;
    let mut fine = roots_at(sys, n_used)?;
    for attempt in 0..2 {
        let (a, b) = (abscissa_of(&coarse), abscissa_of(&fine));
        let converged = a.is_finite() && b.is_finite() && (a - b).abs() < REFINEMENT_TOLERANCE;
        if converged || attempt == 1 {
            return Ok(SpectrumResult {
                abscissa: b,
                roots: fine,
                collocation: n_used,
                converged,
            });
        }
        coarse = fine;
        n_used += 8;
        fine = roots_at(sys, n_used)?;
    }
    unreachable!("loop returns on its second pass")
}

/// [`spectral_abscissa`] with the default collocation size.
pub fn spectral_abscissa_auto(sys: &DelaySystem) -> Result<SpectrumResult> {
    spectral_abscissa(sys, DEFAULT_COLLOCATION)
}

/// Oracle verdicts over a parameter grid.
pub fn abscissa_sweep(
    family: &ParameterizedFamily,
    lambdas: &[f64],
    n_pts: usize,
    mode: Parallelism,
) -> Result<Vec<SpectrumResult>> {
    map_slice(mode, lambdas, |&l| {
        family.at(l).and_then(|sys| spectral_abscissa(&sys, n_pts))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiation_matrix_is_exact_on_cubics() {
        let (x, d) = cheb(6);
        let f: Vec<f64> = x.iter().map(|t| t * t * t - t).collect();
        for (i, xi) in x.iter().enumerate() {
            let df: f64 = (0..x.len()).map(|j| d[(i, j)] * f[j]).sum();
            assert!((df - (3.0 * xi * xi - 1.0)).abs() < 1e-12);
        }
    }
}
