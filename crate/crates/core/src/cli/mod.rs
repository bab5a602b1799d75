//! Command-line harness: `solve`, `sweep` and `verify`.
//!
//! Exit codes: 0 when every run reaches a critical point (or every verify
//! check passes), 1 for usage and configuration errors, 2 when a run hits
//! `max_iter`, 3 for line-search, subproblem or numerical failures.

pub mod artifacts;
pub mod config;
pub mod expr;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use self::artifacts::{ConfigEcho, SweepRow};
use self::config::{ProblemSource, RunConfigFile};
use crate::diagnostics;
use crate::objective::{MultiObjective, Point};
use crate::problems;
use crate::solver::{self, RunReport, SolverConfig, SolverError, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pareto-descent", version, about = "Inexact multiobjective steepest descent")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solve and write trajectory, directions and report files.
    Solve(RunArgs),
    /// Solve once per σ and write `<out>.sweep.csv`.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated σ values, each in [0, 1).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        sigmas: Vec<f64>,
    },
    /// Validate a builtin problem against the oracle samplers.
    Verify {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to `<out>.verify.json`.
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Builtin problem name; overrides the config file.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Starting point, e.g. "2,2".
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Criticality tolerance on |α|.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output path prefix.
    #[arg(long)]
    pub out: Option<String>,
    /// Accepted for a uniform interface; solves are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reference point for the quasi-Fejér check (defaults to the final iterate).
    #[arg(long, allow_hyphen_values = true)]
    pub x_tilde: Option<String>,
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub source: ProblemSource,
    pub problem: MultiObjective,
    pub x0: Vec<f64>,
    pub solver: SolverConfig,
    pub output: String,
    pub x_tilde: Option<Vec<f64>>,
}

impl RunSpec {
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho::new(
            &self.source,
            &self.x0,
            self.solver,
            &self.output,
            self.x_tilde.as_deref(),
        )
    }
}

fn flag_list(name: &str, s: &str) -> Result<Vec<f64>, String> {
    config::parse_list(s).map_err(|(offset, msg)| format!("--{name}: {msg} at offset {offset}"))
}

/// Merges the config file (if any) with flags; flags win.
pub fn resolve(args: &RunArgs) -> Result<RunSpec, String> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfigFile::parse(&text).map_err(|e| format!("{}:{e}", path.display()))?
        }
        None => RunConfigFile::default(),
    };
    let source = match (&args.problem, file.problem) {
        (Some(name), _) => ProblemSource::Builtin(name.clone()),
        (None, Some(src)) => src,
        (None, None) => return Err("no problem given; use --problem or a config file".to_string()),
    };
    let (problem, recommended) = match &source {
        ProblemSource::Builtin(name) => {
            let d = problems::get_problem(name).map_err(|e| e.to_string())?;
            (d.problem, Some(d.recommended_x0))
        }
        ProblemSource::Inline(p) => (p.to_objective(), None),
    };
    let x0 = match &args.x0 {
        Some(s) => flag_list("x0", s)?,
        None => file
            .x0
            .or(recommended)
            .ok_or_else(|| "no starting point; use --x0 or `x0 =`".to_string())?,
    };
    if x0.len() != problem.n() {
        return Err(format!(
            "x0 has {} coordinates, problem expects {}",
            x0.len(),
            problem.n()
        ));
    }
    let x_tilde = match &args.x_tilde {
        Some(s) => Some(flag_list("x-tilde", s)?),
        None => file.x_tilde,
    };
    if let Some(xt) = &x_tilde {
        if xt.len() != problem.n() {
            return Err(format!(
                "x_tilde has {} coordinates, problem expects {}",
                xt.len(),
                problem.n()
            ));
        }
    }
    let defaults = SolverConfig::default();
    let solver = SolverConfig {
        beta: args.beta.or(file.beta).unwrap_or(defaults.beta),
        sigma: args.sigma.or(file.sigma).unwrap_or(defaults.sigma),
        eps_critical: args.eps.or(file.eps_critical).unwrap_or(defaults.eps_critical),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
        ..defaults
    };
    config::check_beta(solver.beta)?;
    config::check_sigma(solver.sigma)?;
    config::check_eps(solver.eps_critical)?;
    solver.validate().map_err(|e| e.to_string())?;
    let output = args
        .out
        .clone()
        .or(file.output)
        .unwrap_or_else(|| source.name().to_string());
    Ok(RunSpec {
        source,
        problem,
        x0,
        solver,
        output,
        x_tilde,
    })
}

pub fn exit_code(termination: Termination) -> i32 {
    match termination {
        Termination::CriticalPoint => EXIT_OK,
        Termination::MaxIter => EXIT_MAX_ITER,
        Termination::LinesearchFailure | Termination::SubproblemFailure => EXIT_FAILURE,
    }
}

fn solver_error_code(e: &SolverError) -> i32 {
    match e {
        SolverError::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

pub fn run_spec(spec: &RunSpec) -> Result<RunReport, SolverError> {
    let x0 = Point::new(spec.x0.clone())?;
    solver::run(&spec.problem, &x0, &spec.solver)
}

pub fn cmd_solve(args: &RunArgs) -> i32 {
    let spec = match resolve(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = match run_spec(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return solver_error_code(&e);
        }
    };
    let summary = match diagnostics::summarize(&report, &spec.problem, spec.x_tilde.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: diagnostics: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Err(e) = artifacts::write_run(&spec.output, &spec.echo(), &report, &summary) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    println!(
        "{} after {} iterations, final alpha {:e}, diagnostics {}",
        report.termination.as_str(),
        report.iterations(),
        report.final_alpha,
        if summary.all_ok() { "ok" } else { "FAILED" }
    );
    exit_code(report.termination)
}

pub fn cmd_sweep(args: &RunArgs, sigmas: &[f64]) -> i32 {
    if let Some(bad) = sigmas.iter().find(|s| config::check_sigma(**s).is_err()) {
        eprintln!("error: sigma must lie in [0, 1), got {bad}");
        return EXIT_USAGE;
    }
    let spec = match resolve(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let results: Vec<Result<RunReport, SolverError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sigmas
            .iter()
            .map(|&sigma| {
                let spec = RunSpec {
                    solver: SolverConfig { sigma, ..spec.solver },
                    ..spec.clone()
                };
                scope.spawn(move || run_spec(&spec))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });

    let mut code = EXIT_OK;
    let mut rows = Vec::with_capacity(sigmas.len());
    for (&sigma, result) in sigmas.iter().zip(results) {
        match result {
            Ok(r) => {
                code = code.max(exit_code(r.termination));
                rows.push(SweepRow {
                    sigma,
                    iterations: r.iterations(),
                    total_inner_iterations: r.total_inner_iterations(),
                    final_alpha: r.final_alpha,
                    termination: r.termination,
                });
            }
            Err(e) => {
                eprintln!("error: sigma {sigma}: {e}");
                code = EXIT_FAILURE;
            }
        }
    }
    let path = artifacts::artifact_path(&spec.output, "sweep.csv");
    if let Err(e) = artifacts::write_sweep(&path, &rows) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    for r in &rows {
        println!(
            "sigma {:<6} {:>6} iterations {:>8} inner  {}",
            r.sigma,
            r.iterations,
            r.total_inner_iterations,
            r.termination.as_str()
        );
    }
    code
}

pub fn cmd_verify(problem: &str, seed: u64, out: Option<&str>) -> i32 {
    let desc = match problems::get_problem(problem) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = match verify::verify_problem(&desc, seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("verify report serializes");
    println!("{text}");
    if let Some(prefix) = out {
        if let Err(e) = artifacts::write_json(&artifacts::artifact_path(prefix, "verify.json"), &report) {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    }
    if report.all_passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep { run, sigmas } => cmd_sweep(run, sigmas),
        Command::Verify { problem, seed, out } => cmd_verify(problem, *seed, out.as_deref()),
    }
}
