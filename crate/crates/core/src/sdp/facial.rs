//! Facial reduction by forced-zero diagonals.
//!
//! An equality `Σ cₖ xₖ = 0` whose variables are all diagonal entries of PSD
//! (or nonnegative diagonal) blocks, with coefficients of one sign, forces each
//! of those entries to zero; a zero diagonal entry of a PSD matrix zeroes its
//! whole row and column. Removing those rows and columns leaves an equivalent
//! problem that may have a strictly feasible point where the original does not.

use super::presolve::{presolve, PresolveOutcome};
use super::{BlockHandle, BlockKind, SdpProblem, VarSlot};
use crate::polyalg::{LinearEquation, VarId};

/// Map from the original problem to the reduced one.
#[derive(Clone, Debug)]
pub struct FacialReduction {
    pub reduced: SdpProblem,
    /// For each original variable, its id in the reduced problem (`None` = fixed to 0).
    pub var_map: Vec<Option<VarId>>,
    /// Number of block rows/columns removed.
    pub removed: usize,
}

impl FacialReduction {
    /// Lifts reduced-problem values back to the original variable ids.
    pub fn lift(&self, values: &[f64]) -> Vec<f64> {
        self.var_map
            .iter()
            .map(|v| v.map_or(0.0, |id| values[id.index()]))
            .collect()
    }
}

fn is_diagonal(slot: VarSlot) -> Option<(usize, usize)> {
    match slot {
        VarSlot::Entry { block, i, j } if i == j => Some((block, i)),
        _ => None,
    }
}

/// Relative size below which a presolved coefficient is treated as cancellation noise.
const NOISE: f64 = 1e-12;

/// Diagonal positions `(block, i)` forced to zero by one equation
/// `Σ cₖ xₖ = rhs` (given as `(var, coef)` pairs).
fn forced_by(problem: &SdpProblem, terms: &[(u32, f64)], rhs: f64) -> Option<Vec<(usize, usize)>> {
    let scale = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
    if scale == 0.0 || rhs.abs() > NOISE * scale {
        return None;
    }
    let live: Vec<&(u32, f64)> = terms.iter().filter(|t| t.1.abs() > NOISE * scale).collect();
    let same_sign = live.iter().all(|t| t.1 > 0.0) || live.iter().all(|t| t.1 < 0.0);
    if !same_sign {
        return None;
    }
    live.iter()
        .map(|t| is_diagonal(problem.slots[t.0 as usize]))
        .collect()
}

fn forced_zero_diagonals(problem: &SdpProblem) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for eq in &problem.equalities {
        let terms: Vec<(u32, f64)> = eq.terms.iter().map(|&(v, c)| (v.0, c)).collect();
        out.extend(forced_by(problem, &terms, eq.rhs).unwrap_or_default());
    }
    if let PresolveOutcome::Reduced(pre) = presolve(problem) {
        for (row, &b) in pre.rows.iter().zip(&pre.rhs) {
            out.extend(forced_by(problem, row, b).unwrap_or_default());
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Removes the given diagonal positions (with their rows and columns).
fn restrict(problem: &SdpProblem, zero: &[(usize, usize)]) -> (SdpProblem, Vec<Option<VarId>>) {
    let mut active: Vec<Vec<bool>> = problem.blocks.iter().map(|b| vec![true; b.size]).collect();
    for &(b, i) in zero {
        active[b][i] = false;
    }
    let mut reduced = SdpProblem::new();
    let mut new_block: Vec<Option<(BlockHandle, Vec<usize>)>> =
        Vec::with_capacity(problem.blocks.len());
    for (b, blk) in problem.blocks.iter().enumerate() {
        let mut idx = vec![usize::MAX; blk.size];
        let mut count = 0;
        for (i, slot) in idx.iter_mut().enumerate() {
            if active[b][i] {
                *slot = count;
                count += 1;
            }
        }
        if count == 0 {
            new_block.push(None);
            continue;
        }
        let h = match blk.kind {
            BlockKind::Psd => reduced.add_psd_block(count),
            BlockKind::Diagonal => reduced.add_diagonal_block(count),
        }
        .expect("count is positive");
        new_block.push(Some((h, idx)));
    }
    let var_map: Vec<Option<VarId>> = problem
        .slots
        .iter()
        .map(|slot| match *slot {
            VarSlot::Free => Some(reduced.new_free_var()),
            VarSlot::Entry { block, i, j } => match &new_block[block] {
                Some((h, idx)) if active[block][i] && active[block][j] => {
                    Some(reduced.entry(*h, idx[i], idx[j]))
                }
                _ => None,
            },
        })
        .collect();
    for eq in &problem.equalities {
        let terms: Vec<(VarId, f64)> = eq
            .terms
            .iter()
            .filter_map(|&(v, c)| var_map[v.index()].map(|nv| (nv, c)))
            .collect();
        reduced.add_equality(LinearEquation { terms, rhs: eq.rhs });
    }
    (reduced, var_map)
}

/// Repeatedly removes forced-zero diagonals; `None` when there are none.
pub fn reduce(problem: &SdpProblem) -> Option<FacialReduction> {
    let mut current: Option<SdpProblem> = None;
    let mut var_map: Vec<Option<VarId>> = (0..problem.num_vars())
        .map(|v| Some(VarId(v as u32)))
        .collect();
    let mut removed = 0;
    loop {
        let p = current.as_ref().unwrap_or(problem);
        let zero = forced_zero_diagonals(p);
        if zero.is_empty() {
            break;
        }
        removed += zero.len();
        let (next, map) = restrict(p, &zero);
        for v in var_map.iter_mut() {
            *v = v.and_then(|id| map[id.index()]);
        }
        current = Some(next);
    }
    current.map(|reduced| FacialReduction {
        reduced,
        var_map,
        removed,
    })
}
