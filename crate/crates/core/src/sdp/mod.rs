//! Semidefinite-program data model, the in-process interior-point backend,
//! SDPA sparse import/export and independent residual verification.
//!
//! Problems are pure feasibility problems: find values for PSD block entries,
//! nonnegative diagonal-block entries and free scalars satisfying a set of
//! linear equalities. The backend internally maximises the smallest
//! eigenvalue slack `t` of the cone variables, so a `Feasible` answer always
//! comes with a strictly interior certificate.

mod facial;
mod ipm;
mod presolve;
pub mod sdpa;

use std::time::Duration;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::par::Parallelism;
use crate::polyalg::{coefficient_equalities, LinearEquation, MatrixPoly, VarId};

/// Cone kind of a variable block.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// Symmetric positive semidefinite matrix; entries `(i, j)` with `i ≤ j`.
    Psd,
    /// Nonnegative diagonal (an LP block); entries `(i, i)` only.
    Diagonal,
}

/// Handle of a registered block.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockHandle(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub size: usize,
    pub kind: BlockKind,
    first: u32,
}

impl Block {
    /// Number of scalar variables stored for this block.
    pub fn var_count(&self) -> usize {
        match self.kind {
            BlockKind::Psd => self.size * (self.size + 1) / 2,
            BlockKind::Diagonal => self.size,
        }
    }
}

/// What a scalar variable id refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum VarSlot {
    Entry { block: usize, i: usize, j: usize },
    Free,
}

/// Registry of blocks, free scalars and linear equalities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    blocks: Vec<Block>,
    slots: Vec<VarSlot>,
    equalities: Vec<LinearEquation>,
    contradictions: usize,
}

fn packed_index(size: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // Row-major upper triangle: row i starts after Σ_{r<i} (size − r) entries.
    i * size - i * i.saturating_sub(1) / 2 - i + j
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_block(&mut self, size: usize, kind: BlockKind) -> Result<BlockHandle> {
        if size == 0 {
            return Err(Error::InvalidArgument("block size must be positive".into()));
        }
        let b = self.blocks.len();
        let first = self.slots.len() as u32;
        match kind {
            BlockKind::Psd => {
                for i in 0..size {
                    for j in i..size {
                        self.slots.push(VarSlot::Entry { block: b, i, j });
                    }
                }
            }
            BlockKind::Diagonal => {
                for i in 0..size {
                    self.slots.push(VarSlot::Entry { block: b, i, j: i });
                }
            }
        }
        self.blocks.push(Block { size, kind, first });
        Ok(BlockHandle(b))
    }

    /// Registers a `size × size` PSD block.
    pub fn add_psd_block(&mut self, size: usize) -> Result<BlockHandle> {
        self.add_block(size, BlockKind::Psd)
    }

    /// Registers `size` nonnegative scalars.
    pub fn add_diagonal_block(&mut self, size: usize) -> Result<BlockHandle> {
        self.add_block(size, BlockKind::Diagonal)
    }

    /// A fresh unconstrained scalar.
    pub fn new_free_var(&mut self) -> VarId {
        self.slots.push(VarSlot::Free);
        VarId(self.slots.len() as u32 - 1)
    }

    /// Id of entry `(i, j)` (order-insensitive) of a block.
    pub fn entry(&self, h: BlockHandle, i: usize, j: usize) -> VarId {
        let b = &self.blocks[h.0];
        assert!(
            i < b.size && j < b.size,
            "entry ({i},{j}) outside a {}-block",
            b.size
        );
        let off = match b.kind {
            BlockKind::Psd => packed_index(b.size, i, j),
            BlockKind::Diagonal => {
                assert_eq!(i, j, "diagonal blocks have no off-diagonal entries");
                i
            }
        };
        VarId(b.first + off as u32)
    }

    pub fn block(&self, h: BlockHandle) -> &Block {
        &self.blocks[h.0]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_vars(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, v: VarId) -> VarSlot {
        self.slots[v.index()]
    }

    pub fn num_free_vars(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, VarSlot::Free))
            .count()
    }

    pub fn equalities(&self) -> &[LinearEquation] {
        &self.equalities
    }

    /// Appends one equality row; contradictions `0 = c ≠ 0` are flagged.
    pub fn add_equality(&mut self, eq: LinearEquation) {
        debug_assert!(eq.terms.iter().all(|t| t.0.index() < self.slots.len()));
        if eq.terms.is_empty() {
            if eq.rhs != 0.0 {
                self.contradictions += 1;
                self.equalities.push(eq);
            }
            return;
        }
        self.equalities.push(eq);
    }

    pub fn add_equalities(&mut self, eqs: impl IntoIterator<Item = LinearEquation>) {
        for e in eqs {
            self.add_equality(e);
        }
    }

    /// Adds the coefficient-matching equalities `a ≡ b`.
    pub fn add_poly_equality(&mut self, a: &MatrixPoly, b: &MatrixPoly) -> Result<()> {
        let eqs = coefficient_equalities(a, b)?;
        self.add_equalities(eqs);
        Ok(())
    }

    /// True when some equality reads `0 = c` with `c ≠ 0`.
    pub fn is_trivially_infeasible(&self) -> bool {
        self.contradictions > 0
    }

    /// Dense symmetric value of a block under an assignment.
    pub fn block_matrix(&self, h: BlockHandle, values: &[f64]) -> DMatrix<f64> {
        let b = &self.blocks[h.0];
        let mut m = DMatrix::zeros(b.size, b.size);
        for i in 0..b.size {
            let j_range = match b.kind {
                BlockKind::Psd => i..b.size,
                BlockKind::Diagonal => i..i + 1,
            };
            for j in j_range {
                let v = values[self.entry(h, i, j).index()];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Outcome taxonomy of a solve.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// A strictly interior point satisfying all equalities was found and verified.
    Feasible,
    /// An infeasibility certificate (linear contradiction or verified dual
    /// improving direction) was found.
    Infeasible,
    /// Anything else: iteration limit, numerical breakdown, inconclusive.
    Unknown,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unknown => "unknown",
        }
    }
}

/// Which in-process backend to use.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Built-in primal-dual interior-point method (HKM direction).
    #[default]
    InteriorPoint,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ipm" | "interior-point" | "builtin" => Ok(Backend::InteriorPoint),
            other => Err(Error::BackendUnavailable(other.to_string())),
        }
    }
}

/// Backend configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub backend: Backend,
    pub max_iterations: usize,
    /// Max absolute equality residual accepted for a feasible verdict.
    pub feasibility_tolerance: f64,
    /// Smallest accepted cone-variable eigenvalue for a feasible verdict.
    pub min_slack: f64,
    /// Relative duality-gap target when the problem looks infeasible.
    pub gap_tolerance: f64,
    pub parallelism: Parallelism,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::InteriorPoint,
            max_iterations: 80,
            feasibility_tolerance: 1e-8,
            min_slack: 1e-10,
            gap_tolerance: 1e-8,
            parallelism: Parallelism::Auto,
        }
    }
}

/// Result of [`solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// One value per variable id (meaningful when feasible).
    pub values: Vec<f64>,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Smallest eigenvalue slack of the returned point (feasible case).
    pub slack: Option<f64>,
    /// Best bound on the optimal slack from the dual side, if available.
    pub dual_slack_bound: Option<f64>,
    pub message: String,
}

/// Solves a feasibility problem with the configured backend.
pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
    match config.backend {
        Backend::InteriorPoint => match facial::reduce(problem) {
            None => Ok(ipm::solve(problem, config)),
            Some(fr) => {
                let mut sol = ipm::solve(&fr.reduced, config);
                if sol.status == SolveStatus::Feasible {
                    sol.values = fr.lift(&sol.values);
                }
                sol.message = format!("{} ({} block rows forced to zero)", sol.message, fr.removed);
                Ok(sol)
            }
        },
    }
}

/// Residuals recomputed from raw problem data.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub max_equality_residual: f64,
    /// Smallest eigenvalue (PSD) or entry (diagonal) per block.
    pub block_min_eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
}

impl ResidualReport {
    pub fn passes(&self, feasibility_tolerance: f64, psd_tolerance: f64) -> bool {
        self.max_equality_residual < feasibility_tolerance && self.min_eigenvalue > -psd_tolerance
    }
}

/// Independent check of an assignment: equality residuals and block spectra.
pub fn verify(problem: &SdpProblem, values: &[f64]) -> Result<ResidualReport> {
    if values.len() < problem.num_vars() {
        return Err(Error::MissingAssignment(values.len() as u32));
    }
    let mut max_res: f64 = 0.0;
    for eq in &problem.equalities {
        max_res = max_res.max(eq.residual(values)?.abs());
    }
    let mut mins = Vec::with_capacity(problem.blocks.len());
    for (b, blk) in problem.blocks.iter().enumerate() {
        let m = problem.block_matrix(BlockHandle(b), values);
        let lmin = match blk.kind {
            BlockKind::Psd => SymmetricEigen::new(m).eigenvalues.min(),
            BlockKind::Diagonal => m.diagonal().min(),
        };
        mins.push(lmin);
    }
    let min_eig = mins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ResidualReport {
        max_equality_residual: max_res,
        block_min_eigenvalues: mins,
        min_eigenvalue: min_eig,
    })
}
