//! Inexact multiobjective steepest descent with the vector Armijo rule.
//!
//! Each iteration tests criticality, computes a σ-approximate direction
//! `v^k = −JF(x^k)ᵀw^k`, backtracks for `t_k = 2^{-j}` and updates
//! `x^{k+1} = x^k + t_k·v^k`. The run is deterministic: identical inputs give
//! bit-identical trajectories.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction::{self, DirectionError, DirectionResult, SubproblemConfig, SubproblemStatus};
use crate::linesearch::{self, trial_point, DEFAULT_MAX_J};
use crate::objective::{Jacobian, MultiObjective, ObjectiveError, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Direction(#[from] DirectionError),
    #[error("direction subproblem hit its iteration cap")]
    SubproblemFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta: f64,
    pub sigma: f64,
    /// Stop once `|α(x^k)| ≤ eps_critical`.
    pub eps_critical: f64,
    pub max_iter: usize,
    pub max_j: u32,
    pub subproblem: SubproblemConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.5,
            sigma: 0.0,
            eps_critical: 1e-8,
            max_iter: 10_000,
            max_j: DEFAULT_MAX_J,
            subproblem: SubproblemConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(SolverError::InvalidConfig(format!(
                "sigma must lie in [0, 1), got {}",
                self.sigma
            )));
        }
        if !(self.eps_critical > 0.0 && self.eps_critical.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "eps_critical must be positive, got {}",
                self.eps_critical
            )));
        }
        if self.max_j > 1022 {
            return Err(SolverError::InvalidConfig(format!(
                "max_j must be at most 1022, got {}",
                self.max_j
            )));
        }
        self.subproblem.validate()?;
        Ok(())
    }
}

/// One visited point. The last record of a run is terminal: its step is
/// `t = 0` and it carries the direction data computed at the final point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub fx: Vec<f64>,
    pub v: Vec<f64>,
    pub weights: Vec<f64>,
    pub t: f64,
    pub j: u32,
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    pub sigma_certified: bool,
    pub inner_iterations: usize,
}

impl IterationRecord {
    pub fn norm_v(&self) -> f64 {
        self.v.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CriticalPoint,
    MaxIter,
    LinesearchFailure,
    SubproblemFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::CriticalPoint => "critical_point",
            Termination::MaxIter => "max_iter",
            Termination::LinesearchFailure => "linesearch_failure",
            Termination::SubproblemFailure => "subproblem_failure",
        }
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "critical_point" => Ok(Termination::CriticalPoint),
            "max_iter" => Ok(Termination::MaxIter),
            "linesearch_failure" => Ok(Termination::LinesearchFailure),
            "subproblem_failure" => Ok(Termination::SubproblemFailure),
            other => Err(format!("unknown termination status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub final_x: Vec<f64>,
    pub final_alpha: f64,
}

impl RunReport {
    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.records.iter().map(|r| r.inner_iterations).sum()
    }

    pub fn initial_values(&self) -> Option<&[f64]> {
        self.records.first().map(|r| r.fx.as_slice())
    }
}

/// Criticality test through the exact subproblem: critical iff
/// `alpha_upper ≥ −eps_critical`. Returns the α estimate.
pub fn is_critical(jac: &Jacobian, cfg: &SolverConfig) -> Result<(bool, f64), SolverError> {
    let r = direction::solve_exact(jac, &cfg.subproblem)?;
    if r.status == SubproblemStatus::MaxInnerExceeded {
        return Err(SolverError::SubproblemFailure);
    }
    Ok((r.alpha_upper >= -cfg.eps_critical, r.alpha_upper))
}

enum Verdict {
    Critical(DirectionResult),
    Descend(DirectionResult),
    Failed(DirectionResult),
}

fn classify(jac: &Jacobian, cfg: &SolverConfig) -> Result<(Verdict, usize), SolverError> {
    let eps = cfg.eps_critical;
    let res = direction::solve_sigma_approx(jac, cfg.sigma, &cfg.subproblem)?;
    let inner = res.inner_iterations;
    if res.status == SubproblemStatus::MaxInnerExceeded {
        return Ok((Verdict::Failed(res), inner));
    }
    if cfg.sigma == 0.0 {
        return Ok((
            if res.alpha_upper >= -eps {
                Verdict::Critical(res)
            } else {
                Verdict::Descend(res)
            },
            inner,
        ));
    }
    // alpha_lower ≤ α(x) ≤ alpha_upper
    if res.alpha_lower >= -eps {
        return Ok((Verdict::Critical(res), inner));
    }
    if res.alpha_upper < -eps {
        return Ok((Verdict::Descend(res), inner));
    }
    // the bracket straddles -eps: settle it with an exact solve
    let exact = direction::solve_exact(jac, &cfg.subproblem)?;
    let inner = inner + exact.inner_iterations;
    Ok(match exact.status {
        SubproblemStatus::MaxInnerExceeded => (Verdict::Failed(exact), inner),
        _ if exact.alpha_upper >= -eps => (Verdict::Critical(exact), inner),
        _ => (Verdict::Descend(res), inner),
    })
}

fn record(k: usize, x: &[f64], fx: Vec<f64>, d: &DirectionResult, t: f64, j: u32, inner: usize) -> IterationRecord {
    IterationRecord {
        k,
        x: x.to_vec(),
        fx,
        v: d.v.clone(),
        weights: d.weights.as_slice().to_vec(),
        t,
        j,
        alpha_upper: d.alpha_upper,
        alpha_lower: d.alpha_lower,
        sigma_certified: d.sigma_certified,
        inner_iterations: inner,
    }
}

/// Runs the method from `x0`.
///
/// Numerical breakdowns (subproblem cap, exhausted backtracking) end the run
/// with the corresponding [`Termination`]; only invalid input is an error.
pub fn run(problem: &MultiObjective, x0: &Point, cfg: &SolverConfig) -> Result<RunReport, SolverError> {
    cfg.validate()?;
    if x0.len() != problem.n() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: problem.n(),
            got: x0.len(),
        }
        .into());
    }
    let mut x = x0.as_slice().to_vec();
    let mut records = Vec::new();
    let mut k = 0;
    loop {
        let fx = problem.evaluate(&x)?;
        let jac = problem.jacobian(&x)?;
        let (verdict, inner) = classify(&jac, cfg)?;
        let (d, termination) = match verdict {
            Verdict::Critical(d) => (d, Some(Termination::CriticalPoint)),
            Verdict::Failed(d) => (d, Some(Termination::SubproblemFailure)),
            Verdict::Descend(d) if k >= cfg.max_iter => (d, Some(Termination::MaxIter)),
            Verdict::Descend(d) => (d, None),
        };
        if let Some(termination) = termination {
            let final_alpha = d.alpha_upper;
            records.push(record(k, &x, fx, &d, 0.0, 0, inner));
            return Ok(RunReport {
                config: *cfg,
                records,
                termination,
                final_x: x,
                final_alpha,
            });
        }
        let jv = jac.mul_vec(&d.v);
        match linesearch::armijo_step(problem, &x, &fx, &d.v, &jv, cfg.beta, cfg.max_j) {
            Ok(step) => {
                let next = trial_point(&x, &d.v, step.t);
                records.push(record(k, &x, fx, &d, step.t, step.j, inner));
                x = next;
                k += 1;
            }
            Err(linesearch::LineSearchError::MaxBacktracks { .. }) => {
                let final_alpha = d.alpha_upper;
                records.push(record(k, &x, fx, &d, 0.0, 0, inner));
                return Ok(RunReport {
                    config: *cfg,
                    records,
                    termination: Termination::LinesearchFailure,
                    final_x: x,
                    final_alpha,
                });
            }
            Err(linesearch::LineSearchError::Objective(e)) => return Err(e.into()),
            Err(linesearch::LineSearchError::InvalidBeta(b)) => {
                return Err(SolverError::InvalidConfig(format!("beta {b}")))
            }
        }
    }
}
