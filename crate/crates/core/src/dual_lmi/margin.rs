//! One-parameter system families and stability-margin bisection.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use super::assemble::{assemble, AssemblyOptions};
use super::check::{check_feasible, StabilityReport};
use crate::error::{Error, Result};
use crate::operators::DelaySystem;
use crate::par::{map_slice, Parallelism};
use crate::sdp::{SolveStatus, SolverConfig};

/// How the parameter `λ` enters the system.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// `Aᵢ(λ) = Aᵢ + λ ΔAᵢ`, delays fixed.
    Matrix { direction: Vec<DMatrix<f64>> },
    /// Delays scaled proportionally so that the largest one equals `λ`.
    DelayScaling,
}

/// `λ ↦ system`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterizedFamily {
    pub base: DelaySystem,
    pub kind: FamilyKind,
}

impl ParameterizedFamily {
    pub fn matrix(base: DelaySystem, direction: Vec<DMatrix<f64>>) -> Result<Self> {
        if direction.len() != base.k() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "family direction has {} matrices, system needs {}",
                direction.len(),
                base.k() + 1
            )));
        }
        if direction.iter().any(|d| d.shape() != (base.n(), base.n())) {
            return Err(Error::DimensionMismatch(
                "family direction matrices must be n×n".into(),
            ));
        }
        Ok(ParameterizedFamily {
            base,
            kind: FamilyKind::Matrix { direction },
        })
    }

    pub fn delay_scaling(base: DelaySystem) -> Self {
        ParameterizedFamily {
            base,
            kind: FamilyKind::DelayScaling,
        }
    }

    /// The member at `λ`.
    pub fn at(&self, lambda: f64) -> Result<DelaySystem> {
        match &self.kind {
            FamilyKind::Matrix { direction } => {
                let a = self
                    .base
                    .matrices()
                    .iter()
                    .zip(direction)
                    .map(|(a, d)| a + d * lambda)
                    .collect();
                DelaySystem::new(a, self.base.taus())
            }
            FamilyKind::DelayScaling => {
                if !(lambda > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "delay scale must be positive, got {lambda}"
                    )));
                }
                let c = lambda / self.base.horizon();
                let taus: Vec<f64> = self.base.taus().iter().map(|t| t * c).collect();
                DelaySystem::new(self.base.matrices().to_vec(), &taus)
            }
        }
    }
}

/// Settings of a bisection run.
#[derive(Clone, Debug)]
pub struct BisectionOptions {
    pub degree: u32,
    pub assembly: AssemblyOptions,
    pub solver: SolverConfig,
    /// Stop when the bracket is narrower than this.
    pub tol: f64,
    /// Probe three points per round concurrently instead of one.
    pub speculative: bool,
}

impl BisectionOptions {
    pub fn new(degree: u32, tol: f64) -> Self {
        BisectionOptions {
            degree,
            assembly: AssemblyOptions::default(),
            solver: SolverConfig::default(),
            tol,
            speculative: false,
        }
    }
}

/// One probe of the bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketEntry {
    pub lambda: f64,
    pub status: SolveStatus,
    pub message: String,
    pub elapsed: Duration,
    /// `(certified side, other side)` after this probe.
    pub bracket: (f64, f64),
}

/// Result of [`margin_bisection`].
#[derive(Clone, Debug, PartialEq)]
pub struct MarginResult {
    /// Last certified-feasible `λ` (a lower bound on the true margin in
    /// the direction of the uncertified end).
    pub margin: f64,
    /// Final `(certified, uncertified)` bracket.
    pub bracket: (f64, f64),
    pub log: Vec<BracketEntry>,
    pub elapsed: Duration,
}

/// Certifies the family member at `λ`.
pub fn probe(
    family: &ParameterizedFamily,
    lambda: f64,
    options: &BisectionOptions,
) -> Result<StabilityReport> {
    let sys = family.at(lambda)?;
    let program = assemble(&sys, options.degree, &options.assembly)?;
    check_feasible(&program, &options.solver)
}

/// Bisects between `lo` and `hi`, exactly one of which must be certified.
/// `Unknown` verdicts count as not certified, so the bracket shrinks
/// toward the certified side.
pub fn margin_bisection(
    family: &ParameterizedFamily,
    lo: f64,
    hi: f64,
    options: &BisectionOptions,
) -> Result<MarginResult> {
    if !(options.tol > 0.0) || !lo.is_finite() || !hi.is_finite() || lo == hi {
        return Err(Error::InvalidArgument(
            "bisection needs finite lo ≠ hi and tol > 0".into(),
        ));
    }
    let start = Instant::now();
    let mut log = Vec::new();
    let run = |points: &[f64], log: &mut Vec<BracketEntry>| -> Result<Vec<bool>> {
        // Inner probes are already parallel inside the solver; the outer
        // fan-out only pays off in speculative mode.
        let mode = if points.len() > 1 {
            Parallelism::Auto
        } else {
            Parallelism::Sequential
        };
        let reports = map_slice(mode, points, |&l| {
            let t = Instant::now();
            probe(family, l, options).map(|r| (r, t.elapsed()))
        });
        let mut out = Vec::with_capacity(points.len());
        for (&lambda, rep) in points.iter().zip(reports) {
            let (rep, elapsed) = rep?;
            log::info!(
                "probe λ = {lambda}: {} ({})",
                rep.status.as_str(),
                rep.message
            );
            log.push(BracketEntry {
                lambda,
                status: rep.status,
                message: rep.message.clone(),
                elapsed,
                bracket: (f64::NAN, f64::NAN),
            });
            out.push(rep.feasible());
        }
        Ok(out)
    };

    let ends = run(&[lo, hi], &mut log)?;
    let (mut good, mut bad) = match (ends[0], ends[1]) {
        (true, false) => (lo, hi),
        (false, true) => (hi, lo),
        _ => return Err(Error::NoSignChange { lo, hi }),
    };
    for e in log.iter_mut() {
        e.bracket = (good, bad);
    }
    while (bad - good).abs() > options.tol {
        let fractions: &[f64] = if options.speculative {
            &[0.25, 0.5, 0.75]
        } else {
            &[0.5]
        };
        let points: Vec<f64> = fractions.iter().map(|f| good + (bad - good) * f).collect();
        let verdicts = run(&points, &mut log)?;
        // Monotone reading: the first uncertified probe closes the bracket.
        let mut new_good = good;
        let mut new_bad = bad;
        for (&p, &ok) in points.iter().zip(&verdicts) {
            if ok {
                new_good = p;
            } else {
                new_bad = p;
                break;
            }
        }
        good = new_good;
        bad = new_bad;
        let n = log.len();
        for e in &mut log[n - points.len()..] {
            e.bracket = (good, bad);
        }
    }
    Ok(MarginResult {
        margin: good,
        bracket: (good, bad),
        log,
        elapsed: start.elapsed(),
    })
}
