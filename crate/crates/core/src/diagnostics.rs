//! Trajectory checks for the convergence properties of the method.
//!
//! Every check is a pure function of a [`RunReport`] (plus the problem, for
//! the one check that re-solves subproblems). Slack constants scale with the
//! magnitudes involved so the same thresholds hold at any problem scale.

use serde::Serialize;
use thiserror::Error;

use crate::direction::{self, SubproblemStatus};
use crate::objective::{norm_sq, MultiObjective, ObjectiveError};
use crate::oracle;
use crate::solver::RunReport;

/// Fraction of the trajectory used for the vanishing-tail test.
pub const TAIL_FRACTION: f64 = 0.1;
/// Tail mean of `t_k‖v^k‖²` must fall below this multiple of its first value.
pub const TAIL_RATIO: f64 = 1e-6;
/// Relative slack of the quasi-Fejér inequality.
pub const FEJER_SLACK: f64 = 1e-10;
/// Relative slack of the proximity bound.
pub const PROXIMITY_SLACK: f64 = 1e-8;
/// Relative slack of the φ-decrease chain.
pub const CHAIN_SLACK: f64 = 1e-10;
/// Default membership slack for reference points.
pub const MEMBERSHIP_SLACK: f64 = 1e-10;

/// Largest `m` for which the proximity check recomputes `v(x)` by face
/// enumeration instead of the dual solver.
const FACE_ENUMERATION_MAX_M: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("phi of an empty vector")]
    Empty,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// `φ(y) = max_i y_i`.
pub fn phi(y: &[f64]) -> Result<f64, DiagnosticsError> {
    y.iter().copied().reduce(f64::max).ok_or(DiagnosticsError::Empty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Nothing to check (too few records).
    Vacuous,
    /// The reference point is not in the dominating set; the inequality is
    /// not guaranteed and was not evaluated.
    PreconditionViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub status: CheckStatus,
    /// Largest `lhs − rhs` over the checked items; the check passes iff this
    /// is `≤ 0`. Zero for vacuous checks.
    pub worst_violation: f64,
    /// Record index attaining the worst violation.
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Records skipped because their subproblem could not be re-solved.
    pub skipped: Vec<usize>,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        matches!(self.status, CheckStatus::Pass | CheckStatus::Vacuous)
    }

    fn vacuous() -> Self {
        CheckOutcome {
            status: CheckStatus::Vacuous,
            worst_violation: 0.0,
            worst_index: None,
            checked: 0,
            skipped: Vec::new(),
        }
    }

    fn from_violations(items: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut worst = f64::NEG_INFINITY;
        let mut worst_index = None;
        let mut checked = 0;
        for (k, v) in items {
            checked += 1;
            // NaN counts as a failure
            if v > worst || v.is_nan() && !worst.is_nan() {
                worst = v;
                worst_index = Some(k);
            }
        }
        if checked == 0 {
            return Self::vacuous();
        }
        CheckOutcome {
            status: if worst <= 0.0 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            worst_violation: worst,
            worst_index,
            checked,
            skipped: Vec::new(),
        }
    }
}

/// `F(x^{k+1}) ⪯ F(x^k)` for every consecutive pair, zero slack.
pub fn check_monotone(report: &RunReport) -> CheckOutcome {
    CheckOutcome::from_violations(report.records.windows(2).map(|w| {
        let worst = w[1]
            .fx
            .iter()
            .zip(&w[0].fx)
            .map(|(next, prev)| next - prev)
            .fold(f64::NEG_INFINITY, f64::max);
        (w[1].k, worst)
    }))
}

/// Every iterate stays in the initial level set: `F(x^k) ⪯ F(x^0)`.
pub fn check_level_set(report: &RunReport) -> CheckOutcome {
    let Some(first) = report.records.first() else {
        return CheckOutcome::vacuous();
    };
    CheckOutcome::from_violations(report.records.iter().skip(1).map(|r| {
        let worst =
            r.fx.iter()
                .zip(&first.fx)
                .map(|(f, f0)| f - f0)
                .fold(f64::NEG_INFINITY, f64::max);
        (r.k, worst)
    }))
}

/// The sequence `t_k‖v^k‖²` used by the tail test. The terminal record has
/// no step; it contributes `‖v‖²`, the value a unit step would give.
pub fn step_residuals(report: &RunReport) -> Vec<f64> {
    let last = report.records.len().saturating_sub(1);
    report
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = if i == last { 1.0 } else { r.t };
            t * norm_sq(&r.v)
        })
        .collect()
}

/// Summability of `t_k²‖v^k‖²` and vanishing of `t_k‖v^k‖²`.
///
/// Partial sums of `t_k²‖v^k‖²` must be finite and non-decreasing; the mean
/// of `t_k‖v^k‖²` over the last 10% of records must not exceed
/// `1e-6·(first value + 1e-300)`.
pub fn check_summability(report: &RunReport) -> CheckOutcome {
    if report.records.len() < 2 {
        return CheckOutcome::vacuous();
    }
    let mut partial = 0.0f64;
    for (i, r) in report.records.iter().enumerate() {
        let next = partial + r.t * r.t * norm_sq(&r.v);
        if !next.is_finite() || next < partial {
            return CheckOutcome {
                status: CheckStatus::Fail,
                worst_violation: f64::INFINITY,
                worst_index: Some(i),
                checked: i + 1,
                skipped: Vec::new(),
            };
        }
        partial = next;
    }
    let residuals = step_residuals(report);
    let tail_len = ((residuals.len() as f64 * TAIL_FRACTION).ceil() as usize).max(1);
    let tail = &residuals[residuals.len() - tail_len..];
    let tail_mean = tail.iter().sum::<f64>() / tail_len as f64;
    let threshold = TAIL_RATIO * (residuals[0] + 1e-300);
    let violation = tail_mean - threshold;
    CheckOutcome {
        status: if violation <= 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        worst_violation: violation,
        worst_index: Some(residuals.len() - tail_len),
        checked: residuals.len(),
        skipped: Vec::new(),
    }
}

/// A reference point `x̃` with `F(x̃) ⪯ F(x^k) + slack` along the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominatingReference {
    pub x_tilde: Vec<f64>,
    pub f_tilde: Vec<f64>,
    pub slack: f64,
}

impl DominatingReference {
    pub fn new(problem: &MultiObjective, x_tilde: Vec<f64>, slack: f64) -> Result<Self, ObjectiveError> {
        let f_tilde = problem.evaluate(&x_tilde)?;
        Ok(DominatingReference {
            x_tilde,
            f_tilde,
            slack,
        })
    }

    /// The run's final iterate, with the default membership slack.
    pub fn final_iterate(report: &RunReport) -> Option<Self> {
        let last = report.records.last()?;
        Some(DominatingReference {
            x_tilde: last.x.clone(),
            f_tilde: last.fx.clone(),
            slack: MEMBERSHIP_SLACK,
        })
    }

    /// Membership in the dominating set of the run.
    pub fn dominates(&self, report: &RunReport) -> bool {
        report.records.iter().all(|r| {
            self.f_tilde
                .iter()
                .zip(&r.fx)
                .all(|(ft, fk)| *ft <= fk + self.slack * fk.abs().max(1.0))
        })
    }
}

/// Per-step quasi-Fejér inequality
/// `‖x^{k+1} − x̃‖² ≤ ‖x^k − x̃‖² + t_k²‖v^k‖²` with slack
/// `1e-10·(1 + ‖x^k − x̃‖²)`.
pub fn check_quasi_fejer(report: &RunReport, reference: &DominatingReference) -> CheckOutcome {
    if !reference.dominates(report) {
        return CheckOutcome {
            status: CheckStatus::PreconditionViolated,
            worst_violation: f64::INFINITY,
            worst_index: None,
            checked: 0,
            skipped: Vec::new(),
        };
    }
    let dist_sq = |x: &[f64]| -> f64 { x.iter().zip(&reference.x_tilde).map(|(a, b)| (a - b) * (a - b)).sum() };
    CheckOutcome::from_violations(report.records.windows(2).map(|w| {
        let before = dist_sq(&w[0].x);
        let after = dist_sq(&w[1].x);
        let allowance = w[0].t * w[0].t * norm_sq(&w[0].v);
        (w[0].k, after - before - allowance - FEJER_SLACK * (1.0 + before))
    }))
}

/// Proximity `‖v^k − v(x^k)‖² ≤ 2σ|α(x^k)|` with slack `1e-8·max(1, |α|)`.
///
/// `v(x^k)` is recomputed at every record: by face enumeration for up to ten
/// criteria, otherwise by the dual solver. Records whose re-solve fails are
/// skipped and listed.
pub fn check_proximity(
    report: &RunReport,
    problem: &MultiObjective,
    sigma: f64,
) -> Result<CheckOutcome, ObjectiveError> {
    let mut items = Vec::with_capacity(report.records.len());
    let mut skipped = Vec::new();
    for r in &report.records {
        let jac = problem.jacobian(&r.x)?;
        let (v_exact, alpha) = if jac.rows() <= FACE_ENUMERATION_MAX_M {
            let d = oracle::face_enumeration_direction(&jac);
            (d.v, d.alpha)
        } else {
            match direction::solve_exact(&jac, &report.config.subproblem) {
                Ok(d) if d.status != SubproblemStatus::MaxInnerExceeded => (d.v, d.alpha_upper),
                _ => {
                    skipped.push(r.k);
                    continue;
                }
            }
        };
        let dev: f64 = r.v.iter().zip(&v_exact).map(|(a, b)| (a - b) * (a - b)).sum();
        let bound = 2.0 * sigma * alpha.abs() + PROXIMITY_SLACK * alpha.abs().max(1.0);
        items.push((r.k, dev - bound));
    }
    let mut outcome = CheckOutcome::from_violations(items);
    outcome.skipped = skipped;
    Ok(outcome)
}

/// Per-step decrease of `φ∘F`:
/// `φ(F(x^{k+1})) − φ(F(x^k)) ≤ β((1 − σ)t_k·alpha_upper − ½t_k‖v^k‖²)`.
pub fn check_descent_chain(report: &RunReport) -> CheckOutcome {
    let (beta, sigma) = (report.config.beta, report.config.sigma);
    CheckOutcome::from_violations(report.records.windows(2).map(|w| {
        let (prev, next) = (&w[0], &w[1]);
        let phi_prev = prev.fx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let phi_next = next.fx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bound = beta * ((1.0 - sigma) * prev.t * prev.alpha_upper - 0.5 * prev.t * norm_sq(&prev.v));
        (
            prev.k,
            phi_next - phi_prev - bound - CHAIN_SLACK * phi_prev.abs().max(1.0),
        )
    }))
}

/// All trajectory checks for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub monotone_ok: bool,
    pub level_set_ok: bool,
    pub summability_ok: bool,
    pub fejer_ok: bool,
    pub proximity_ok: bool,
    pub descent_chain_ok: bool,
    pub monotone: CheckOutcome,
    pub level_set: CheckOutcome,
    pub summability: CheckOutcome,
    pub fejer: CheckOutcome,
    pub proximity: CheckOutcome,
    pub descent_chain: CheckOutcome,
    pub reference: Option<DominatingReference>,
}

impl DiagnosticsSummary {
    pub fn all_ok(&self) -> bool {
        self.monotone_ok
            && self.level_set_ok
            && self.summability_ok
            && self.fejer_ok
            && self.proximity_ok
            && self.descent_chain_ok
    }
}

/// Runs every check. The quasi-Fejér reference defaults to the final
/// iterate; pass `x_tilde` to override it.
pub fn summarize(
    report: &RunReport,
    problem: &MultiObjective,
    x_tilde: Option<&[f64]>,
) -> Result<DiagnosticsSummary, ObjectiveError> {
    let reference = match x_tilde {
        Some(x) => Some(DominatingReference::new(problem, x.to_vec(), MEMBERSHIP_SLACK)?),
        None => DominatingReference::final_iterate(report),
    };
    let fejer = match &reference {
        Some(r) => check_quasi_fejer(report, r),
        None => CheckOutcome::vacuous(),
    };
    let monotone = check_monotone(report);
    let level_set = check_level_set(report);
    let summability = check_summability(report);
    let proximity = check_proximity(report, problem, report.config.sigma)?;
    let descent_chain = check_descent_chain(report);
    Ok(DiagnosticsSummary {
        monotone_ok: monotone.ok(),
        level_set_ok: level_set.ok(),
        summability_ok: summability.ok(),
        fejer_ok: fejer.ok(),
        proximity_ok: proximity.ok(),
        descent_chain_ok: descent_chain.ok(),
        monotone,
        level_set,
        summability,
        fejer,
        proximity,
        descent_chain,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Point;
    use crate::solver::{self, IterationRecord, SolverConfig, Termination};

    fn quad_pair() -> MultiObjective {
        crate::problems::quad_pair([0.0, 0.0], [1.0, 0.0]).problem
    }

    fn record(k: usize, x: Vec<f64>, fx: Vec<f64>, v: Vec<f64>, t: f64) -> IterationRecord {
        IterationRecord {
            k,
            x,
            fx,
            v,
            weights: vec![1.0],
            t,
            j: 0,
            alpha_upper: 0.0,
            alpha_lower: 0.0,
            sigma_certified: true,
            inner_iterations: 0,
        }
    }

    fn report(records: Vec<IterationRecord>) -> RunReport {
        RunReport {
            config: SolverConfig::default(),
            final_x: records.last().map(|r| r.x.clone()).unwrap_or_default(),
            records,
            termination: Termination::CriticalPoint,
            final_alpha: 0.0,
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&[1.0, 2.0, 3.0]).unwrap(), 3.0);
        let (x, y) = ([1.0, -1.0], [-1.0, 1.0]);
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        assert!(phi(&sum).unwrap() <= phi(&x).unwrap() + phi(&y).unwrap());
        assert_eq!(phi(&[2.5, 7.5]).unwrap(), 2.5 * phi(&[1.0, 3.0]).unwrap());
        assert_eq!(phi(&[]), Err(DiagnosticsError::Empty));
    }

    #[test]
    fn monotone_on_solver_run_and_counterexample() {
        let p = quad_pair();
        let r = solver::run(&p, &Point::new(vec![2.0, 2.0]).unwrap(), &SolverConfig::default()).unwrap();
        let m = check_monotone(&r);
        assert!(m.ok() && m.worst_violation <= 0.0);

        let bad = report(vec![
            record(0, vec![0.0], vec![1.0, 1.0], vec![0.0], 1.0),
            record(1, vec![0.0], vec![0.5, 1.5], vec![0.0], 0.0),
        ]);
        let m = check_monotone(&bad);
        assert_eq!(m.status, CheckStatus::Fail);
        assert_eq!(m.worst_violation, 0.5);
        assert_eq!(m.worst_index, Some(1));

        let single = report(vec![record(0, vec![5.0], vec![5.0, -1.0], vec![0.0], 0.0)]);
        assert_eq!(check_monotone(&single).status, CheckStatus::Vacuous);
    }

    #[test]
    fn summability_cases() {
        let p = quad_pair();
        let r = solver::run(&p, &Point::new(vec![2.0, 2.0]).unwrap(), &SolverConfig::default()).unwrap();
        assert!(check_summability(&r).ok());

        let constant: Vec<IterationRecord> = (0..20)
            .map(|k| record(k, vec![k as f64], vec![-(k as f64)], vec![1.0], 1.0))
            .collect();
        assert_eq!(check_summability(&report(constant)).status, CheckStatus::Fail);

        assert_eq!(check_summability(&report(vec![])).status, CheckStatus::Vacuous);
        let one = report(vec![record(0, vec![0.0], vec![0.0], vec![0.0], 0.0)]);
        assert_eq!(check_summability(&one).status, CheckStatus::Vacuous);
    }

    #[test]
    fn quasi_fejer_cases() {
        let p = quad_pair();
        let r = solver::run(&p, &Point::new(vec![2.0, 2.0]).unwrap(), &SolverConfig::default()).unwrap();
        let reference = DominatingReference::final_iterate(&r).unwrap();
        assert!(check_quasi_fejer(&r, &reference).ok());

        let sq = crate::problems::scalar_quad().problem;
        let r = solver::run(&sq, &Point::new(vec![1.0, 0.0]).unwrap(), &SolverConfig::default()).unwrap();
        let origin = DominatingReference::new(&sq, vec![0.0, 0.0], MEMBERSHIP_SLACK).unwrap();
        let out = check_quasi_fejer(&r, &origin);
        assert_eq!(out.status, CheckStatus::Pass);
        // ‖x¹‖² = 0 ≤ ‖x⁰‖² + t²‖v‖² = 2
        assert!((out.worst_violation + 2.0).abs() < 1e-9);

        let far = DominatingReference::new(&p, vec![10.0, 10.0], MEMBERSHIP_SLACK).unwrap();
        let r = solver::run(&p, &Point::new(vec![2.0, 2.0]).unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(check_quasi_fejer(&r, &far).status, CheckStatus::PreconditionViolated);
    }

    #[test]
    fn proximity_cases() {
        let p = quad_pair();
        let x0 = Point::new(vec![2.0, 2.0]).unwrap();
        let exact = solver::run(&p, &x0, &SolverConfig::default()).unwrap();
        let out = check_proximity(&exact, &p, 0.0).unwrap();
        assert!(out.ok());

        let cfg = SolverConfig {
            sigma: 0.5,
            ..SolverConfig::default()
        };
        let inexact = solver::run(&p, &Point::new(vec![-3.0, 4.0]).unwrap(), &cfg).unwrap();
        assert!(check_proximity(&inexact, &p, 0.5).unwrap().ok());

        // v = 0 at a non-critical point
        let bogus = report(vec![record(0, vec![2.0, 2.0], vec![4.0, 2.5], vec![0.0, 0.0], 0.0)]);
        assert_eq!(check_proximity(&bogus, &p, 0.5).unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn summary_is_pure() {
        let p = quad_pair();
        let cfg = SolverConfig {
            sigma: 0.5,
            ..SolverConfig::default()
        };
        let r = solver::run(&p, &Point::new(vec![-3.0, 4.0]).unwrap(), &cfg).unwrap();
        let a = summarize(&r, &p, None).unwrap();
        let b = summarize(&r, &p, None).unwrap();
        assert_eq!(a, b);
        assert!(a.all_ok(), "{a:#?}");
    }
}
