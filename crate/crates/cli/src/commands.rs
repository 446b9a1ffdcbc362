//! Subcommands and their exit-code contract.
//!
//! | command | 0 | 1 | 2 |
//! |---------|---|---|---|
//! | `analyze` | certified stable | not certified | error |
//! | `margin` | margin found | — | error, no verdict change |
//! | `oracle` | stable | unstable | error, not converged |
//! | `export-sdpa` | written | — | error |
//! | `selftest` | all checks pass | — | any check fails |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use lkdual::dual_lmi::{
    assemble, check_feasible, margin_bisection, AssemblyOptions, BisectionOptions,
};
use lkdual::oracle::{spectral_abscissa, DEFAULT_COLLOCATION};
use lkdual::sdp::sdpa::{to_sdpa_sparse, SdpaData};
use lkdual::sdp::{Backend, SolverConfig};
use lkdual::selftest::{run_all, SelftestConfig};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report;
use crate::spec::LoadedSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Default Gram degree when neither the flag nor the spec sets one.
const DEFAULT_DEGREE: u32 = 2;
/// Default bisection width.
const DEFAULT_TOL: f64 = 1e-3;
/// Rightmost roots listed in oracle blocks.
const REPORTED_ROOTS: usize = 6;

#[derive(Debug, Parser)]
#[command(
    name = "lkdual",
    version,
    about = "Certify exponential stability of linear multi-delay systems"
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one feasibility check on a system.
    Analyze(AnalyzeArgs),
    /// Bisect a family parameter for the largest certified value.
    Margin(MarginArgs),
    /// Rightmost characteristic roots by spectral collocation.
    Oracle(OracleArgs),
    /// Write the assembled program in SDPA sparse format.
    ExportSdpa(ExportArgs),
    /// Run the bundled invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// System specification (JSON).
    pub spec: PathBuf,
    /// Gram degree `d`.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Strictness margin (default `1e−3 · max(1, ‖A₀‖_F)`).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Solver backend.
    #[arg(long, default_value = "ipm")]
    pub solver: String,
    /// Analyse the family member at this parameter value.
    #[arg(long)]
    pub at: Option<f64>,
    /// Collocation points per interval of the oracle cross-check.
    #[arg(long, default_value_t = DEFAULT_COLLOCATION)]
    pub collocation: usize,
    /// Skip the oracle cross-check.
    #[arg(long)]
    pub no_oracle: bool,
    /// Report file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MarginArgs {
    /// System specification with a `family` section.
    pub spec: PathBuf,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Stop when the bracket is narrower than this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// One end of the bracket.
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    /// The other end of the bracket.
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Probe three points per round concurrently.
    #[arg(long)]
    pub speculative: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub spec: PathBuf,
    #[arg(long, default_value_t = DEFAULT_COLLOCATION)]
    pub collocation: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub at: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub at: Option<f64>,
    /// Destination `.dat-s` file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Seed of the randomised instances.
    #[arg(long, default_value_t = SelftestConfig::default().seed)]
    pub seed: u64,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Margin(a) => margin(&a),
        Command::Oracle(a) => oracle(&a),
        Command::ExportSdpa(a) => export_sdpa(&a),
        Command::Selftest(a) => selftest(&a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let text = report::render(value);
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn assembly_options(epsilon: Option<f64>, spec: &LoadedSpec) -> Result<AssemblyOptions, CliError> {
    let epsilon = epsilon.or(spec.spec.analysis.epsilon);
    if epsilon.is_some_and(|e| !(e.is_finite() && e > 0.0)) {
        return Err(CliError::Usage(
            "--epsilon must be finite and positive".into(),
        ));
    }
    Ok(AssemblyOptions {
        epsilon,
        ..AssemblyOptions::default()
    })
}

fn degree(flag: Option<u32>, spec: &LoadedSpec) -> u32 {
    flag.or(spec.spec.analysis.degree).unwrap_or(DEFAULT_DEGREE)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<i32, CliError> {
    let spec = LoadedSpec::load(&args.spec)?;
    let sys = spec.system_at(args.at)?;
    let d = degree(args.degree, &spec);
    let options = assembly_options(args.epsilon, &spec)?;
    let solver = SolverConfig {
        backend: Backend::from_str(&args.solver)?,
        ..SolverConfig::default()
    };
    let program = assemble(&sys, d, &options)?;
    let rep = check_feasible(&program, &solver)?;
    let certified = rep.feasible() && rep.certificate.is_some();

    let mut out = report::header("analyze", &spec.source, spec.spec.name.as_deref());
    out.insert(
        "verdict".into(),
        json!(if certified {
            "certified-stable"
        } else {
            "not-certified"
        }),
    );
    if let (Some(l), Some(p)) = (args.at, spec.parameter_name()) {
        out.insert(
            "parameter".into(),
            json!({ "name": p, "value": report::num(l) }),
        );
    }
    out.insert("analysis".into(), report::analysis(&rep));
    out.insert(
        "certificate".into(),
        rep.certificate
            .as_ref()
            .map_or(Value::Null, report::certificate),
    );
    if !args.no_oracle {
        let s = spectral_abscissa(&sys, args.collocation)?;
        out.insert("oracle".into(), report::spectrum(&s, REPORTED_ROOTS));
        if certified && s.converged && s.abscissa >= 0.0 {
            log::warn!(
                "certificate disagrees with the oracle (abscissa {:e})",
                s.abscissa
            );
        }
    }
    emit(&Value::Object(out), args.out.as_deref())?;
    eprintln!(
        "{}: {} at d = {d} ({}, {} iterations, {:.2} s)",
        args.spec.display(),
        if certified {
            "certified stable"
        } else {
            "not certified"
        },
        rep.status.as_str(),
        rep.iterations,
        rep.solve_time.as_secs_f64()
    );
    Ok(if certified { EXIT_OK } else { EXIT_NEGATIVE })
}

pub fn margin(args: &MarginArgs) -> Result<i32, CliError> {
    let spec = LoadedSpec::load(&args.spec)?;
    let family = spec.require_family()?;
    let defaults = &spec.spec.analysis;
    let (lo, hi) = match (args.lo.or(defaults.lo), args.hi.or(defaults.hi)) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            return Err(CliError::Usage(
                "margin needs --lo and --hi (or analysis.lo/hi in the spec)".into(),
            ))
        }
    };
    let d = degree(args.degree, &spec);
    let mut opts = BisectionOptions::new(d, args.tol.or(defaults.tol).unwrap_or(DEFAULT_TOL));
    opts.assembly = assembly_options(args.epsilon, &spec)?;
    opts.speculative = args.speculative;
    let result = margin_bisection(family, lo, hi, &opts)?;

    let parameter = spec.parameter_name().unwrap_or("lambda");
    let mut out = report::header("margin", &spec.source, spec.spec.name.as_deref());
    out.insert("degree".into(), json!(d));
    out.insert("tol".into(), report::num(opts.tol));
    out.insert("margin".into(), report::margin(&result, parameter));
    let at_margin = spectral_abscissa(&family.at(result.margin)?, DEFAULT_COLLOCATION)?;
    out.insert(
        "oracle".into(),
        report::spectrum(&at_margin, REPORTED_ROOTS),
    );
    emit(&Value::Object(out), args.out.as_deref())?;
    eprintln!(
        "{}: {parameter} margin {:.6} (bracket [{:.6}, {:.6}], {} probes, {:.1} s)",
        args.spec.display(),
        result.margin,
        result.bracket.0.min(result.bracket.1),
        result.bracket.0.max(result.bracket.1),
        result.log.len(),
        result.elapsed.as_secs_f64()
    );
    Ok(EXIT_OK)
}

pub fn oracle(args: &OracleArgs) -> Result<i32, CliError> {
    let spec = LoadedSpec::load(&args.spec)?;
    let sys = spec.system_at(args.at)?;
    let s = spectral_abscissa(&sys, args.collocation)?;
    let mut out = report::header("oracle", &spec.source, spec.spec.name.as_deref());
    if let (Some(l), Some(p)) = (args.at, spec.parameter_name()) {
        out.insert(
            "parameter".into(),
            json!({ "name": p, "value": report::num(l) }),
        );
    }
    out.insert("oracle".into(), report::spectrum(&s, REPORTED_ROOTS));
    emit(&Value::Object(out), args.out.as_deref())?;
    if !s.converged {
        eprintln!(
            "{}: collocation did not converge (abscissa {:e})",
            args.spec.display(),
            s.abscissa
        );
        return Ok(EXIT_ERROR);
    }
    eprintln!(
        "{}: spectral abscissa {:e} ({})",
        args.spec.display(),
        s.abscissa,
        if s.is_stable() { "stable" } else { "unstable" }
    );
    Ok(if s.is_stable() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

pub fn export_sdpa(args: &ExportArgs) -> Result<i32, CliError> {
    let spec = LoadedSpec::load(&args.spec)?;
    let sys = spec.system_at(args.at)?;
    let d = degree(args.degree, &spec);
    let program = assemble(&sys, d, &assembly_options(args.epsilon, &spec)?)?;
    to_sdpa_sparse(&program.problem, &args.out)?;
    let data = SdpaData::from_problem(&program.problem);
    eprintln!(
        "{}: wrote {} ({} constraints, {} blocks)",
        args.spec.display(),
        args.out.display(),
        data.m,
        data.block_sizes.len()
    );
    Ok(EXIT_OK)
}

pub fn selftest(args: &SelftestArgs) -> Result<i32, CliError> {
    let cfg = SelftestConfig {
        seed: args.seed,
        ..SelftestConfig::default()
    };
    let outcomes = run_all(&cfg)?;
    let mut all = true;
    for o in &outcomes {
        all &= o.passed;
        println!(
            "{} {:<26} cases {:>4}  worst {:.3e}  tol {:.0e}  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.cases,
            o.worst,
            o.tolerance,
            o.detail
        );
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} checks passed", outcomes.len());
    Ok(if all { EXIT_OK } else { EXIT_ERROR })
}
