//! Presolve: eliminate free variables by sparse Gaussian elimination, drop
//! linearly dependent rows and normalise row scaling.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use super::{SdpProblem, VarSlot};

type Row = Vec<(u32, f64)>;

/// A pivot row used to recover one free variable by back-substitution.
#[derive(Clone, Debug)]
pub(super) struct Elimination {
    pub var: u32,
    pub row: Row,
    pub rhs: f64,
}

/// Equalities over cone variables only, rows independent and unit-norm.
#[derive(Clone, Debug)]
pub(super) struct Presolved {
    pub rows: Vec<Row>,
    pub rhs: Vec<f64>,
    pub eliminations: Vec<Elimination>,
}

pub(super) enum PresolveOutcome {
    Reduced(Presolved),
    Infeasible(String),
}

/// Relative threshold under which a value produced by cancellation is treated as zero.
const CANCEL_EPS: f64 = 1e-14;
/// Relative pivot threshold for dependent-row detection.
const RANK_EPS: f64 = 1e-11;
/// A contradiction must exceed this fraction of the rhs scale to count.
const CONTRADICTION_EPS: f64 = 1e-8;

/// `a - f·b` for sorted sparse rows, dropping cancellation noise.
fn axpy_rows(a: &Row, f: f64, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i >= a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, -f * b[j].1));
            j += 1;
        } else {
            let x = a[i].1;
            let y = f * b[j].1;
            let v = x - y;
            if v.abs() > CANCEL_EPS * (x.abs() + y.abs()) {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn coef(row: &Row, var: u32) -> Option<f64> {
    row.binary_search_by_key(&var, |t| t.0)
        .ok()
        .map(|k| row[k].1)
}

pub(super) fn presolve(problem: &SdpProblem) -> PresolveOutcome {
    let nvars = problem.num_vars();
    let is_free: Vec<bool> = (0..nvars)
        .map(|v| matches!(problem.slots[v], VarSlot::Free))
        .collect();

    let mut rows: Vec<Row> = Vec::with_capacity(problem.equalities.len());
    let mut rhs: Vec<f64> = Vec::with_capacity(problem.equalities.len());
    for eq in &problem.equalities {
        let mut r: Row = eq.terms.iter().map(|&(id, c)| (id.0, c)).collect();
        r.sort_by_key(|t| t.0);
        rows.push(r);
        rhs.push(eq.rhs);
    }
    let rhs_scale = rhs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));

    // Column lists for free variables (may hold stale or duplicate entries).
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (r, row) in rows.iter().enumerate() {
        for &(v, _) in row {
            if is_free[v as usize] {
                cols[v as usize].push(r);
            }
        }
    }
    let mut active = vec![true; rows.len()];
    let mut eliminated = vec![false; nvars];

    let clean = |col: &mut Vec<usize>, rows: &[Row], active: &[bool], v: u32| {
        col.sort_unstable();
        col.dedup();
        col.retain(|&r| active[r] && coef(&rows[r], v).is_some());
    };

    let mut heap: BinaryHeap<Reverse<(usize, u32)>> = BinaryHeap::new();
    for v in 0..nvars {
        if is_free[v] && !cols[v].is_empty() {
            clean(&mut cols[v], &rows, &active, v as u32);
            heap.push(Reverse((cols[v].len(), v as u32)));
        }
    }

    let mut eliminations = Vec::new();
    while let Some(Reverse((count, v))) = heap.pop() {
        let vi = v as usize;
        if eliminated[vi] {
            continue;
        }
        let mut col = std::mem::take(&mut cols[vi]);
        clean(&mut col, &rows, &active, v);
        if col.len() != count {
            // Stale priority: requeue with the true count.
            if !col.is_empty() {
                heap.push(Reverse((col.len(), v)));
            }
            cols[vi] = col;
            continue;
        }
        if col.is_empty() {
            continue;
        }
        let amax = col
            .iter()
            .map(|&r| coef(&rows[r], v).unwrap().abs())
            .fold(0.0, f64::max);
        let pivot = *col
            .iter()
            .filter(|&&r| coef(&rows[r], v).unwrap().abs() >= 0.1 * amax)
            .min_by_key(|&&r| rows[r].len())
            .expect("column is nonempty");
        let prow = rows[pivot].clone();
        let prhs = rhs[pivot];
        let pv = coef(&prow, v).unwrap();
        active[pivot] = false;
        eliminated[vi] = true;
        for &r in &col {
            if r == pivot {
                continue;
            }
            let f = coef(&rows[r], v).unwrap() / pv;
            let mut new_row = axpy_rows(&rows[r], f, &prow);
            new_row.retain(|t| t.0 != v);
            rows[r] = new_row;
            rhs[r] -= f * prhs;
        }
        // Rows touched may now contain further free variables from the pivot row.
        for &(u, _) in &prow {
            let ui = u as usize;
            if u == v || !is_free[ui] || eliminated[ui] {
                continue;
            }
            cols[ui].extend(col.iter().copied().filter(|&r| r != pivot));
            clean(&mut cols[ui], &rows, &active, u);
            heap.push(Reverse((cols[ui].len(), u)));
        }
        eliminations.push(Elimination {
            var: v,
            row: prow,
            rhs: prhs,
        });
    }

    // Remaining rows involve cone variables only.
    let mut kept_rows = Vec::new();
    let mut kept_rhs = Vec::new();
    for r in 0..rows.len() {
        if !active[r] {
            continue;
        }
        debug_assert!(rows[r].iter().all(|t| !is_free[t.0 as usize]));
        if rows[r].is_empty() {
            if rhs[r].abs() > CONTRADICTION_EPS * rhs_scale {
                return PresolveOutcome::Infeasible(format!(
                    "equalities are linearly inconsistent (0 = {:e})",
                    rhs[r]
                ));
            }
            continue;
        }
        kept_rows.push(std::mem::take(&mut rows[r]));
        kept_rhs.push(rhs[r]);
    }

    // Normalise rows before rank detection so thresholds are scale free.
    for (row, b) in kept_rows.iter_mut().zip(kept_rhs.iter_mut()) {
        let norm = row.iter().map(|t| t.1 * t.1).sum::<f64>().sqrt();
        for t in row.iter_mut() {
            t.1 /= norm;
        }
        *b /= norm;
    }

    match drop_dependent_rows(&kept_rows, &kept_rhs, nvars) {
        Ok(keep) => {
            let rows = keep.iter().map(|&k| kept_rows[k].clone()).collect();
            let rhs = keep.iter().map(|&k| kept_rhs[k]).collect();
            PresolveOutcome::Reduced(Presolved {
                rows,
                rhs,
                eliminations,
            })
        }
        Err(msg) => PresolveOutcome::Infeasible(msg),
    }
}

/// Pivoted Cholesky on the row Gram matrix `A Aᵀ`; returns the indices of an
/// independent row subset, or an error if a dependent row is inconsistent.
fn drop_dependent_rows(rows: &[Row], rhs: &[f64], nvars: usize) -> Result<Vec<usize>, String> {
    let m = rows.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    // Column-wise accumulation of the Gram matrix.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nvars];
    for (r, row) in rows.iter().enumerate() {
        for &(v, c) in row {
            by_col[v as usize].push((r, c));
        }
    }
    let mut g = DMatrix::<f64>::zeros(m, m);
    for col in &by_col {
        for &(r1, c1) in col {
            for &(r2, c2) in col {
                g[(r1, r2)] += c1 * c2;
            }
        }
    }
    // Pivoted Cholesky: g[perm] = L Lᵀ restricted to the accepted pivots.
    let mut diag: Vec<f64> = (0..m).map(|i| g[(i, i)]).collect();
    let dmax = diag.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut chosen: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    loop {
        let mut best = None;
        let mut best_val = RANK_EPS * dmax;
        for i in 0..m {
            if !used[i] && diag[i] > best_val {
                best_val = diag[i];
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        let k = chosen.len();
        used[p] = true;
        let lpp = diag[p].sqrt();
        l[(p, k)] = lpp;
        for i in 0..m {
            if used[i] {
                continue;
            }
            let mut s = g[(i, p)];
            for c in 0..k {
                s -= l[(i, c)] * l[(p, c)];
            }
            l[(i, k)] = s / lpp;
            diag[i] -= l[(i, k)] * l[(i, k)];
        }
        chosen.push(p);
    }
    if chosen.len() == m {
        return Ok((0..m).collect());
    }
    // Consistency: a dependent row r satisfies a_r = Σ w_k a_k over chosen rows;
    // its rhs must match Σ w_k b_k.  Solve G_cc w = G_c r.
    let kc = chosen.len();
    let mut gcc = DMatrix::<f64>::zeros(kc, kc);
    for (a, &ra) in chosen.iter().enumerate() {
        for (b, &rb) in chosen.iter().enumerate() {
            gcc[(a, b)] = g[(ra, rb)];
        }
    }
    let chol = gcc.cholesky().ok_or("rank detection failed")?;
    let bscale = rhs.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    for r in 0..m {
        if used[r] {
            continue;
        }
        let gcr = nalgebra::DVector::from_iterator(kc, chosen.iter().map(|&c| g[(c, r)]));
        let w = chol.solve(&gcr);
        let pred: f64 = chosen
            .iter()
            .zip(w.iter())
            .map(|(&c, &wk)| wk * rhs[c])
            .sum();
        if (pred - rhs[r]).abs() > 1e-6 * bscale {
            return Err(format!(
                "equalities are linearly inconsistent (dependent row mismatch {:e})",
                pred - rhs[r]
            ));
        }
    }
    let mut keep = chosen;
    keep.sort_unstable();
    Ok(keep)
}

/// Recovers free variables in reverse elimination order.
pub(super) fn back_substitute(elims: &[Elimination], values: &mut [f64]) {
    for e in elims.iter().rev() {
        let mut s = e.rhs;
        let mut pv = 0.0;
        for &(u, c) in &e.row {
            if u == e.var {
                pv = c;
            } else {
                s -= c * values[u as usize];
            }
        }
        values[e.var as usize] = s / pv;
    }
}
