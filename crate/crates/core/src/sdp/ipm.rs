//! Infeasible-start primal-dual interior-point method (HKM direction,
//! Mehrotra predictor-corrector) for feasibility problems.
//!
//! After presolve the problem is `A(X) = b, X ⪰ 0` over the cone blocks.
//! We solve the slack embedding
//!
//! ```text
//!   min σ   s.t.  A(X') − σ·A(I) = b − A(I),   X' ⪰ 0, σ ≥ 0
//! ```
//!
//! so that `X = X' + (1 − σ)I`. Any iterate with `σ < 1` that satisfies the
//! equalities yields a strictly interior point of the original problem; a dual
//! point with objective `bᵀy > 1` and `C − A*(y) ⪰ 0` proves infeasibility.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::presolve::{back_substitute, presolve, PresolveOutcome, Presolved};
use super::{verify, BlockKind, SdpProblem, SdpSolution, SolveStatus, SolverConfig, VarSlot};
use crate::par::{map_indices, Parallelism};

/// Constraint `k` restricted to one PSD block: symmetric entries with both
/// orientations listed (`(i,j,v)` and `(j,i,v)` for `i ≠ j`).
#[derive(Clone, Debug)]
struct BlockCon {
    row: usize,
    /// Expanded (both triangles) entries.
    ent: Vec<(usize, usize, f64)>,
    /// Distinct column indices `q` of the expanded entries.
    cols: Vec<usize>,
}

#[derive(Clone, Debug)]
struct PsdData {
    n: usize,
    cons: Vec<BlockCon>,
}

/// LP scalars (diagonal blocks plus σ): per variable its column of `A`.
#[derive(Clone, Debug)]
struct LpData {
    cols: Vec<Vec<(usize, f64)>>,
    c: Vec<f64>,
}

#[derive(Clone, Debug)]
struct StdForm {
    m: usize,
    b: DVector<f64>,
    psd: Vec<PsdData>,
    lp: LpData,
}

/// Where a cone variable of the original problem lives in [`StdForm`].
#[derive(Copy, Clone, Debug)]
enum ConeLoc {
    Psd { blk: usize, i: usize, j: usize },
    Lp(usize),
    None,
}

struct Layout {
    locs: Vec<ConeLoc>,
    sigma: usize,
}

fn build(problem: &SdpProblem, pre: &Presolved) -> (StdForm, Layout) {
    let mut psd_index = vec![usize::MAX; problem.blocks.len()];
    let mut psd = Vec::new();
    let mut lp_count = 0usize;
    let mut lp_base = vec![0usize; problem.blocks.len()];
    for (b, blk) in problem.blocks.iter().enumerate() {
        match blk.kind {
            BlockKind::Psd => {
                psd_index[b] = psd.len();
                psd.push(PsdData {
                    n: blk.size,
                    cons: Vec::new(),
                });
            }
            BlockKind::Diagonal => {
                lp_base[b] = lp_count;
                lp_count += blk.size;
            }
        }
    }
    let sigma = lp_count;
    let mut lp = LpData {
        cols: vec![Vec::new(); lp_count + 1],
        c: vec![0.0; lp_count + 1],
    };
    lp.c[sigma] = 1.0;

    let locs: Vec<ConeLoc> = (0..problem.num_vars())
        .map(|v| match problem.slots[v] {
            VarSlot::Free => ConeLoc::None,
            VarSlot::Entry { block, i, j } => match problem.blocks[block].kind {
                BlockKind::Psd => ConeLoc::Psd {
                    blk: psd_index[block],
                    i,
                    j,
                },
                BlockKind::Diagonal => ConeLoc::Lp(lp_base[block] + i),
            },
        })
        .collect();

    let m = pre.rows.len();
    let mut b = DVector::zeros(m);
    for (k, row) in pre.rows.iter().enumerate() {
        // Per-block entries of this row.
        let mut per_block: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); psd.len()];
        let mut trace = 0.0;
        for &(v, c) in row {
            match locs[v as usize] {
                ConeLoc::Psd { blk, i, j } => {
                    if i == j {
                        per_block[blk].push((i, i, c));
                        trace += c;
                    } else {
                        per_block[blk].push((i, j, 0.5 * c));
                        per_block[blk].push((j, i, 0.5 * c));
                    }
                }
                ConeLoc::Lp(p) => {
                    lp.cols[p].push((k, c));
                    trace += c;
                }
                ConeLoc::None => unreachable!("free variables are eliminated by presolve"),
            }
        }
        for (blk, ent) in per_block.into_iter().enumerate() {
            if ent.is_empty() {
                continue;
            }
            let mut cols: Vec<usize> = ent.iter().map(|e| e.1).collect();
            cols.sort_unstable();
            cols.dedup();
            psd[blk].cons.push(BlockCon { row: k, ent, cols });
        }
        if trace != 0.0 {
            lp.cols[sigma].push((k, -trace));
        }
        b[k] = pre.rhs[k] - trace;
    }
    (StdForm { m, b, psd, lp }, Layout { locs, sigma })
}

/// Primal-dual iterate.
#[derive(Clone, Debug)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    zl: DVector<f64>,
    y: DVector<f64>,
}

/// A search direction.
struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    dzl: DVector<f64>,
    dy: DVector<f64>,
}

impl StdForm {
    /// `A(X)` for possibly nonsymmetric block matrices.
    fn apply(&self, x: &[DMatrix<f64>], xl: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, data) in self.psd.iter().enumerate() {
            for con in &data.cons {
                let mut s = 0.0;
                for &(i, j, v) in &con.ent {
                    s += v * x[blk][(i, j)];
                }
                out[con.row] += s;
            }
        }
        for (p, col) in self.lp.cols.iter().enumerate() {
            for &(k, c) in col {
                out[k] += c * xl[p];
            }
        }
        out
    }

    /// `A*(y)` per block and for the LP part.
    fn adjoint(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut blocks = Vec::with_capacity(self.psd.len());
        for data in &self.psd {
            let mut m = DMatrix::zeros(data.n, data.n);
            for con in &data.cons {
                let yk = y[con.row];
                if yk == 0.0 {
                    continue;
                }
                for &(i, j, v) in &con.ent {
                    m[(i, j)] += yk * v;
                }
            }
            blocks.push(m);
        }
        let mut lp = DVector::zeros(self.lp.cols.len());
        for (p, col) in self.lp.cols.iter().enumerate() {
            lp[p] = col.iter().map(|&(k, c)| c * y[k]).sum();
        }
        (blocks, lp)
    }

    fn total_dim(&self) -> usize {
        self.psd.iter().map(|d| d.n).sum::<usize>() + self.lp.cols.len()
    }

    /// Schur complement `M_kl = Σ_b tr(A_k X A_l Z⁻¹) + Σ_lp a_k a_l x/z`.
    fn schur(
        &self,
        x: &[DMatrix<f64>],
        zi: &[DMatrix<f64>],
        xl: &DVector<f64>,
        zl: &DVector<f64>,
        mode: Parallelism,
    ) -> DMatrix<f64> {
        let mut mat = DMatrix::<f64>::zeros(self.m, self.m);
        for (blk, data) in self.psd.iter().enumerate() {
            let cols = schur_block(data, &x[blk], &zi[blk], mode);
            for (l, col) in cols.into_iter().enumerate() {
                let rl = data.cons[l].row;
                for (off, v) in col.into_iter().enumerate() {
                    let rk = data.cons[l + off].row;
                    mat[(rk, rl)] += v;
                    if rk != rl {
                        mat[(rl, rk)] += v;
                    }
                }
            }
        }
        for (p, col) in self.lp.cols.iter().enumerate() {
            let w = xl[p] / zl[p];
            for &(k, ck) in col {
                for &(l, cl) in col {
                    mat[(k, l)] += w * ck * cl;
                }
            }
        }
        mat
    }
}

fn schur_block(
    data: &PsdData,
    x: &DMatrix<f64>,
    zi: &DMatrix<f64>,
    mode: Parallelism,
) -> Vec<Vec<f64>> {
    let n = data.n;
    let nc = data.cons.len();
    // Suffix sums of expanded entry counts for the cost model.
    let mut suffix = vec![0usize; nc + 1];
    for k in (0..nc).rev() {
        suffix[k] = suffix[k + 1] + data.cons[k].ent.len();
    }
    map_indices(mode, nc, |l| {
        let cl = &data.cons[l];
        let later = &data.cons[l..];
        let ncols = cl.cols.len();
        // T = X A_l restricted to the nonzero columns of A_l (n × ncols).
        let mut t = DMatrix::<f64>::zeros(n, ncols);
        for &(p, q, c) in &cl.ent {
            let qi = cl.cols.binary_search(&q).unwrap();
            for r in 0..n {
                t[(r, qi)] += c * x[(r, p)];
            }
        }
        let cost_full = n * n * ncols;
        let cost_sparse = ncols * suffix[l];
        if cost_full < cost_sparse {
            // G = T · Z⁻¹[cols, :] fully, then read the needed entries.
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (qi, &q) in cl.cols.iter().enumerate() {
                for i in 0..n {
                    let zqi = zi[(q, i)];
                    if zqi == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        g[(j, i)] += t[(j, qi)] * zqi;
                    }
                }
            }
            later
                .iter()
                .map(|ck| ck.ent.iter().map(|&(i, j, a)| a * g[(j, i)]).sum())
                .collect()
        } else {
            later
                .iter()
                .map(|ck| {
                    let mut s = 0.0;
                    for &(i, j, a) in &ck.ent {
                        let mut gji = 0.0;
                        for (qi, &q) in cl.cols.iter().enumerate() {
                            gji += t[(j, qi)] * zi[(q, i)];
                        }
                        s += a * gji;
                    }
                    s
                })
                .collect()
        }
    })
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest step `α` keeping `X + α·D ⪰ 0`, given a Cholesky factor of `X`.
fn max_step_psd(chol: &Cholesky<f64, Dyn>, d: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    // W = L⁻¹ D L⁻ᵀ
    let mut w = d.clone();
    l.solve_lower_triangular_mut(&mut w);
    let mut wt = w.transpose();
    l.solve_lower_triangular_mut(&mut wt);
    let w = sym(&wt);
    let lmin = w.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, d: &DVector<f64>) -> f64 {
    x.iter().zip(d.iter()).fold(
        f64::INFINITY,
        |a, (&xi, &di)| if di < 0.0 { a.min(-xi / di) } else { a },
    )
}

enum Outcome {
    Feasible {
        values: Vec<f64>,
        slack: f64,
        iterations: usize,
    },
    Infeasible {
        bound: f64,
        iterations: usize,
        msg: String,
    },
    Unknown {
        iterations: usize,
        msg: String,
        bound: Option<f64>,
    },
}

pub(super) fn solve(problem: &SdpProblem, config: &SolverConfig) -> SdpSolution {
    let start = Instant::now();
    let finish = |status, values, iterations, slack, bound, message: String| SdpSolution {
        status,
        values,
        iterations,
        solve_time: start.elapsed(),
        slack,
        dual_slack_bound: bound,
        message,
    };
    if problem.is_trivially_infeasible() {
        return finish(
            SolveStatus::Infeasible,
            Vec::new(),
            0,
            None,
            None,
            "contradictory constant equality".into(),
        );
    }
    let pre = match presolve(problem) {
        PresolveOutcome::Infeasible(msg) => {
            return finish(SolveStatus::Infeasible, Vec::new(), 0, None, None, msg)
        }
        PresolveOutcome::Reduced(p) => p,
    };
    let (form, layout) = build(problem, &pre);
    match run(problem, &pre, &form, &layout, config) {
        Outcome::Feasible {
            values,
            slack,
            iterations,
        } => finish(
            SolveStatus::Feasible,
            values,
            iterations,
            Some(slack),
            None,
            "interior point found".into(),
        ),
        Outcome::Infeasible {
            bound,
            iterations,
            msg,
        } => finish(
            SolveStatus::Infeasible,
            Vec::new(),
            iterations,
            None,
            Some(1.0 - bound),
            msg,
        ),
        Outcome::Unknown {
            iterations,
            msg,
            bound,
        } => finish(
            SolveStatus::Unknown,
            Vec::new(),
            iterations,
            None,
            bound.map(|b| 1.0 - b),
            msg,
        ),
    }
}

/// Maps an embedded primal point back to the original variables.
fn recover(
    problem: &SdpProblem,
    pre: &Presolved,
    layout: &Layout,
    it: &Iterate,
) -> (Vec<f64>, f64) {
    let shift = 1.0 - it.xl[layout.sigma];
    let mut values = vec![0.0; problem.num_vars()];
    for (v, loc) in layout.locs.iter().enumerate() {
        values[v] = match *loc {
            ConeLoc::Psd { blk, i, j } => it.x[blk][(i, j)] + if i == j { shift } else { 0.0 },
            ConeLoc::Lp(p) => it.xl[p] + shift,
            ConeLoc::None => 0.0,
        };
    }
    back_substitute(&pre.eliminations, &mut values);
    (values, shift)
}

fn run(
    problem: &SdpProblem,
    pre: &Presolved,
    form: &StdForm,
    layout: &Layout,
    config: &SolverConfig,
) -> Outcome {
    let m = form.m;
    let mode = config.parallelism;
    let nlp = form.lp.cols.len();

    if m == 0 {
        // No equalities on cone variables: the identity shift is feasible.
        let it = Iterate {
            x: form.psd.iter().map(|d| DMatrix::zeros(d.n, d.n)).collect(),
            z: Vec::new(),
            xl: DVector::zeros(nlp),
            zl: DVector::zeros(nlp),
            y: DVector::zeros(0),
        };
        let (values, slack) = recover(problem, pre, layout, &it);
        return Outcome::Feasible {
            values,
            slack,
            iterations: 0,
        };
    }

    // Initial point (CSDP-style scaling).
    let bnorm = form.b.norm();
    let mut it = Iterate {
        x: Vec::new(),
        z: Vec::new(),
        xl: DVector::zeros(nlp),
        zl: DVector::zeros(nlp),
        y: DVector::zeros(m),
    };
    for data in &form.psd {
        let n = data.n as f64;
        let mut alpha: f64 = 1.0;
        let mut anorm_max: f64 = 0.0;
        for con in &data.cons {
            let an = con.ent.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt();
            alpha = alpha.max(n * (1.0 + form.b[con.row].abs()) / (1.0 + an));
            anorm_max = anorm_max.max(an);
        }
        let beta = (1.0 + anorm_max) / n.sqrt();
        it.x.push(DMatrix::identity(data.n, data.n) * alpha.sqrt().max(1.0));
        it.z.push(DMatrix::identity(data.n, data.n) * beta.max(1.0));
    }
    let lp_alpha = (1.0 + form.b.amax()).max(1.0);
    it.xl.fill(lp_alpha);
    it.zl.fill(1.0);

    let ntot = form.total_dim() as f64;
    let gamma = 0.95;
    let mut best_bound: Option<f64> = None;
    let mut best_rel_p = f64::INFINITY;
    let mut gram: Option<Option<Cholesky<f64, Dyn>>> = None;

    for iter in 0..config.max_iterations {
        // Inverse of Z per block.
        let mut zi = Vec::with_capacity(form.psd.len());
        let mut xchol = Vec::with_capacity(form.psd.len());
        let mut zchol = Vec::with_capacity(form.psd.len());
        for (blk, _) in form.psd.iter().enumerate() {
            let Some(cz) = Cholesky::new(it.z[blk].clone()) else {
                return Outcome::Unknown {
                    iterations: iter,
                    msg: "dual iterate lost definiteness".into(),
                    bound: best_bound,
                };
            };
            let Some(cx) = Cholesky::new(it.x[blk].clone()) else {
                return Outcome::Unknown {
                    iterations: iter,
                    msg: "primal iterate lost definiteness".into(),
                    bound: best_bound,
                };
            };
            zi.push(cz.inverse());
            zchol.push(cz);
            xchol.push(cx);
        }

        let ax = form.apply(&it.x, &it.xl);
        let rp = &form.b - &ax;
        let (aty, atyl) = form.adjoint(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..form.psd.len()).map(|b| -&aty[b] - &it.z[b]).collect();
        let rdl: DVector<f64> =
            DVector::from_iterator(nlp, (0..nlp).map(|p| form.lp.c[p] - atyl[p] - it.zl[p]));

        let xz: f64 = (0..form.psd.len())
            .map(|b| inner(&it.x[b], &it.z[b]))
            .sum::<f64>()
            + it.xl.dot(&it.zl);
        let mu = xz / ntot;
        let sigma_val = it.xl[layout.sigma];
        let pobj = sigma_val;
        let dobj = form.b.dot(&it.y);
        let rel_p = rp.norm() / (1.0 + bnorm);
        let rel_d =
            (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rdl.norm_squared()).sqrt() / 2.0;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        log::debug!(
            "ipm {iter:3} pobj {pobj:+.6e} dobj {dobj:+.6e} rel_p {rel_p:.2e} rel_d {rel_d:.2e} mu {mu:.2e}"
        );
        // Certificate of feasibility: an iterate with σ < 1, projected onto
        // the equalities if needed, whose recovered point verifies.
        if 1.0 - sigma_val > config.min_slack && rel_p < 1e-3 {
            let candidate = if rel_p < 1e-9 {
                Some(it.clone())
            } else {
                if gram.is_none() {
                    gram = Some(gram_factor(form, mode));
                }
                gram.as_ref()
                    .and_then(|g| g.as_ref())
                    .map(|g| project_primal(form, g, &it))
            };
            if let Some(cand) = candidate {
                if 1.0 - cand.xl[layout.sigma] > config.min_slack {
                    let (values, slack) = recover(problem, pre, layout, &cand);
                    if let Ok(rep) = verify(problem, &values) {
                        if rep.max_equality_residual < config.feasibility_tolerance
                            && rep.min_eigenvalue > 0.0
                        {
                            return Outcome::Feasible {
                                values,
                                slack,
                                iterations: iter,
                            };
                        }
                    }
                }
            }
        }
        // Certificate of infeasibility: a dual point with bᵀy > 1 and C − A*(y) ⪰ 0.
        if dobj > 1.0 + 1e-6 && rel_d < 1e-5 && dual_certificate_holds(form, &it.y) {
            return Outcome::Infeasible {
                bound: dobj,
                iterations: iter,
                msg: format!("dual certificate: optimal slack ≤ {:e}", 1.0 - dobj),
            };
        }
        if rel_d < 1e-8 {
            best_bound = Some(best_bound.map_or(dobj, |b: f64| b.max(dobj)));
        }
        if rel_p < 1e-9 && rel_d < 1e-9 && gap < config.gap_tolerance {
            return Outcome::Unknown {
                iterations: iter,
                msg: format!("converged to marginal slack {:e}", 1.0 - pobj),
                bound: Some(dobj),
            };
        }
        best_rel_p = best_rel_p.min(rel_p);
        if rel_p > 1e-6 && rel_p > 1e3 * best_rel_p {
            return Outcome::Unknown {
                iterations: iter,
                msg: format!("stalled: primal residual grew to {rel_p:.1e}"),
                bound: best_bound,
            };
        }
        if mu < 1e-13 * (1.0 + pobj.abs()) {
            return Outcome::Unknown {
                iterations: iter,
                msg: format!("complementarity exhausted at slack {:e}", 1.0 - pobj),
                bound: best_bound,
            };
        }

        // Newton system.
        let mut schur = form.schur(&it.x, &zi, &it.xl, &it.zl, mode);
        let chol = match factor_spd(&mut schur) {
            Some(c) => c,
            None => {
                return Outcome::Unknown {
                    iterations: iter,
                    msg: "Schur complement not positive definite".into(),
                    bound: best_bound,
                }
            }
        };

        let xrdzi: Vec<DMatrix<f64>> = (0..form.psd.len())
            .map(|b| &it.x[b] * &rd[b] * &zi[b])
            .collect();
        let xrdzil = DVector::from_iterator(nlp, (0..nlp).map(|p| it.xl[p] * rdl[p] / it.zl[p]));
        let base_rhs = &form.b + form.apply(&xrdzi, &xrdzil);
        let zil = DVector::from_iterator(nlp, (0..nlp).map(|p| 1.0 / it.zl[p]));
        let azi = form.apply(&zi, &zil);

        let direction = |sig_mu: f64,
                         corr: Option<(&Vec<DMatrix<f64>>, &DVector<f64>)>|
         -> Direction {
            let mut rhs = &base_rhs - &azi * sig_mu;
            if let Some((w, wl)) = corr {
                rhs += form.apply(w, wl);
            }
            let dy = chol.solve(&rhs);
            let (atdy, atdyl) = form.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = (0..form.psd.len()).map(|b| &rd[b] - &atdy[b]).collect();
            let dzl = &rdl - &atdyl;
            let dx: Vec<DMatrix<f64>> = (0..form.psd.len())
                .map(|b| {
                    let mut d = -&it.x[b] + &zi[b] * sig_mu - &it.x[b] * &dz[b] * &zi[b];
                    if let Some((w, _)) = corr {
                        d -= &w[b];
                    }
                    sym(&d)
                })
                .collect();
            let dxl = DVector::from_iterator(
                nlp,
                (0..nlp).map(|p| {
                    let mut d = -it.xl[p] + sig_mu / it.zl[p] - it.xl[p] * dzl[p] / it.zl[p];
                    if let Some((_, wl)) = corr {
                        d -= wl[p];
                    }
                    d
                }),
            );
            Direction {
                dx,
                dz,
                dxl,
                dzl,
                dy,
            }
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = max_step_lp(&it.xl, &d.dxl);
            let mut ad = max_step_lp(&it.zl, &d.dzl);
            for b in 0..form.psd.len() {
                ap = ap.min(max_step_psd(&xchol[b], &d.dx[b]));
                ad = ad.min(max_step_psd(&zchol[b], &d.dz[b]));
            }
            (ap, ad)
        };

        // Predictor.
        let pred = direction(0.0, None);
        let (ap, ad) = steps(&pred);
        let ap1 = ap.min(1.0);
        let ad1 = ad.min(1.0);
        let mut xz_aff = 0.0;
        for b in 0..form.psd.len() {
            let xa = &it.x[b] + &pred.dx[b] * ap1;
            let za = &it.z[b] + &pred.dz[b] * ad1;
            xz_aff += inner(&xa, &za);
        }
        xz_aff += (&it.xl + &pred.dxl * ap1).dot(&(&it.zl + &pred.dzl * ad1));
        let mu_aff = xz_aff / ntot;
        let sig = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let w: Vec<DMatrix<f64>> = (0..form.psd.len())
            .map(|b| &pred.dx[b] * &pred.dz[b] * &zi[b])
            .collect();
        let wl =
            DVector::from_iterator(nlp, (0..nlp).map(|p| pred.dxl[p] * pred.dzl[p] / it.zl[p]));
        let dir = direction(sig * mu, Some((&w, &wl)));
        let (ap, ad) = steps(&dir);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);

        // Take the step, shortening it if rounding broke definiteness.
        let mut scale = 1.0;
        let next = loop {
            let (ap, ad) = (ap * scale, ad * scale);
            let mut nx = it.clone();
            for b in 0..form.psd.len() {
                nx.x[b] = sym(&(&it.x[b] + &dir.dx[b] * ap));
                nx.z[b] = sym(&(&it.z[b] + &dir.dz[b] * ad));
            }
            nx.xl = &it.xl + &dir.dxl * ap;
            nx.zl = &it.zl + &dir.dzl * ad;
            nx.y = &it.y + &dir.dy * ad;
            let definite =
                nx.x.iter()
                    .chain(&nx.z)
                    .all(|m| Cholesky::new(m.clone()).is_some())
                    && nx.xl.iter().chain(nx.zl.iter()).all(|&v| v > 0.0);
            if definite {
                break Some(nx);
            }
            scale *= 0.5;
            if scale < 1e-6 {
                break None;
            }
        };
        match next {
            Some(nx) => it = nx,
            None => {
                return Outcome::Unknown {
                    iterations: iter,
                    msg: "step length collapsed".into(),
                    bound: best_bound,
                }
            }
        }

        if !it.y.iter().all(|v| v.is_finite()) {
            return Outcome::Unknown {
                iterations: iter,
                msg: "non-finite iterate".into(),
                bound: best_bound,
            };
        }
    }
    Outcome::Unknown {
        iterations: config.max_iterations,
        msg: "iteration limit reached".into(),
        bound: best_bound,
    }
}

/// Factor of `A Aᵀ` (the Schur complement at `X = Z = I`).
fn gram_factor(form: &StdForm, mode: Parallelism) -> Option<Cholesky<f64, Dyn>> {
    let eye: Vec<DMatrix<f64>> = form
        .psd
        .iter()
        .map(|d| DMatrix::identity(d.n, d.n))
        .collect();
    let ones = DVector::from_element(form.lp.cols.len(), 1.0);
    let mut g = form.schur(&eye, &eye, &ones, &ones, mode);
    factor_spd(&mut g)
}

/// Least-norm correction of the primal part onto `A(X) = b`.
fn project_primal(form: &StdForm, gram: &Cholesky<f64, Dyn>, it: &Iterate) -> Iterate {
    let r = &form.b - form.apply(&it.x, &it.xl);
    let w = gram.solve(&r);
    let (dx, dxl) = form.adjoint(&w);
    let mut out = it.clone();
    for (x, d) in out.x.iter_mut().zip(&dx) {
        *x = sym(&(&*x + d));
    }
    out.xl += dxl;
    out
}

/// Cholesky with a tiny diagonal regularisation fallback.
fn factor_spd(m: &mut DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let dmax = m.diagonal().amax();
    let mut reg = 0.0;
    for _ in 0..4 {
        let mut a = m.clone();
        if reg > 0.0 {
            for i in 0..a.nrows() {
                a[(i, i)] += reg;
            }
        }
        if let Some(c) = Cholesky::new(a) {
            return Some(c);
        }
        reg = if reg == 0.0 {
            1e-14 * dmax
        } else {
            reg * 100.0
        };
    }
    None
}

/// Checks `C − A*(y) ⪰ 0` blockwise from scratch.
/// Relative eigenvalue tolerance accepted in a numerical dual certificate.
const DUAL_CERT_TOL: f64 = 1e-7;

fn dual_certificate_holds(form: &StdForm, y: &DVector<f64>) -> bool {
    let (aty, atyl) = form.adjoint(y);
    let mut worst = 0.0_f64;
    for p in 0..atyl.len() {
        let scale = form.lp.c[p].abs().max(atyl[p].abs()).max(1.0);
        worst = worst.min((form.lp.c[p] - atyl[p]) / scale);
    }
    for a in aty {
        let z = -sym(&a);
        let scale = z.amax().max(1e-300);
        worst = worst.min(z.symmetric_eigenvalues().min() / scale);
    }
    log::debug!("dual certificate: worst relative eigenvalue {worst:.2e}");
    worst >= -DUAL_CERT_TOL
}
