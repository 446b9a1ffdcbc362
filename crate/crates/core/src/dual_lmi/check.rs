//! Solving an assembled program and reporting the verdict.

use std::time::Duration;

use nalgebra::DMatrix;

use super::assemble::{AssemblyPath, StabilityProgram};
use crate::error::Result;
use crate::operators::CompleteQuadOp;
use crate::polyalg::MatrixPoly;
use crate::sdp::{solve, verify, SolveStatus, SolverConfig};

/// Numeric Lyapunov operator read back from a feasible solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub p: DMatrix<f64>,
    pub q: Vec<MatrixPoly>,
    pub s: Vec<MatrixPoly>,
    /// Row-major `K × K` grid of kernels `R_ij(s, θ)`.
    pub r: Vec<MatrixPoly>,
    /// Largest violation of the structural operator equalities.
    pub structural_residual: f64,
}

impl Certificate {
    fn from_operator(op: &CompleteQuadOp, values: &[f64]) -> Result<Self> {
        let numeric = op.instantiate(values)?;
        Ok(Certificate {
            p: numeric.p.evaluate(0.0, 0.0, &[])?,
            q: numeric.q,
            s: numeric.s,
            r: numeric.r,
            structural_residual: op.constraint_residual(values)?,
        })
    }
}

/// Outcome of one feasibility check.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    /// Solver verdict; `Feasible` means certified exponentially stable.
    pub status: SolveStatus,
    pub degree: u32,
    pub epsilon: f64,
    pub path: AssemblyPath,
    pub iterations: usize,
    pub solve_time: Duration,
    pub num_vars: usize,
    pub num_equalities: usize,
    pub block_sizes: Vec<usize>,
    /// Max equality residual of the returned point (feasible case).
    pub max_equality_residual: Option<f64>,
    /// Smallest eigenvalue over the cone blocks (feasible case).
    pub min_eigenvalue: Option<f64>,
    /// Upper bound on the achievable interior margin, from the dual side.
    pub dual_slack_bound: Option<f64>,
    pub message: String,
    pub certificate: Option<Certificate>,
}

impl StabilityReport {
    pub fn feasible(&self) -> bool {
        self.status == SolveStatus::Feasible
    }
}

/// Eigenvalue floor accepted on re-verification. Blocks reduced onto a face
/// carry exact zero rows, so the lifted point is PSD but not definite.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Solves the program. A feasible verdict is re-verified from the raw
/// problem data and downgraded to `Unknown` if the residual checks fail.
pub fn check_feasible(
    program: &StabilityProgram,
    config: &SolverConfig,
) -> Result<StabilityReport> {
    let problem = &program.problem;
    let sol = solve(problem, config)?;
    let mut report = StabilityReport {
        status: sol.status,
        degree: program.degree,
        epsilon: program.epsilon,
        path: program.path,
        iterations: sol.iterations,
        solve_time: sol.solve_time,
        num_vars: problem.num_vars(),
        num_equalities: problem.equalities().len(),
        block_sizes: problem.blocks().iter().map(|b| b.size).collect(),
        max_equality_residual: None,
        min_eigenvalue: None,
        dual_slack_bound: sol.dual_slack_bound,
        message: sol.message,
        certificate: None,
    };
    if sol.status == SolveStatus::Feasible {
        let residuals = verify(problem, &sol.values)?;
        report.max_equality_residual = Some(residuals.max_equality_residual);
        report.min_eigenvalue = Some(residuals.min_eigenvalue);
        if residuals.passes(config.feasibility_tolerance, PSD_TOLERANCE) {
            report.certificate = Some(Certificate::from_operator(&program.operator, &sol.values)?);
        } else {
            report.status = SolveStatus::Unknown;
            report.message = format!("{} (re-verification failed)", report.message);
        }
    }
    Ok(report)
}
