//! Registry validation for one builtin problem.

use serde::Serialize;

use crate::direction::{self, SubproblemConfig, SubproblemStatus};
use crate::objective::{norm_sq, ObjectiveError};
use crate::oracle::{self, trial_rng, GridSpec, ViolationReport};
use crate::problems::{ConvexityClass, ProblemDescriptor};
use crate::solver::{self, SolverConfig};

pub const SAMPLER_TRIALS: usize = 1000;
pub const CRITICAL_SAMPLES: usize = 50;
pub const OFF_SET_DISTANCE: f64 = 0.1;
pub const AGREEMENT_POINTS: usize = 20;
pub const JACOBIAN_POINTS: usize = 20;
/// Relative tolerance between analytic and finite-difference Jacobians.
pub const JACOBIAN_RTOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckState {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub state: CheckState,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub problem: String,
    pub seed: u64,
    pub convexity_class: ConvexityClass,
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

// distinct random streams per check
fn sub_seed(seed: u64, check: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(check)
}

fn sampler_check(
    name: &'static str,
    applies: bool,
    run: impl FnOnce() -> Result<ViolationReport, ObjectiveError>,
) -> Result<VerifyCheck, ObjectiveError> {
    if !applies {
        return Ok(VerifyCheck {
            name,
            state: CheckState::Skipped,
            detail: "not implied by the convexity class".to_string(),
        });
    }
    let r = run()?;
    Ok(VerifyCheck {
        name,
        state: if r.passed() { CheckState::Pass } else { CheckState::Fail },
        detail: format!(
            "{} trials, {} applicable, {} violations, worst {:e}",
            r.trials, r.applicable, r.violations, r.worst
        ),
    })
}

/// On-set and off-set misclassifications of the known critical set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSetAgreement {
    pub on_checked: usize,
    pub on_failures: usize,
    pub off_checked: usize,
    pub off_failures: usize,
}

pub fn critical_set_agreement(
    desc: &ProblemDescriptor,
    samples: usize,
    seed: u64,
) -> Result<Option<CriticalSetAgreement>, solver::SolverError> {
    let Some(set) = &desc.known_critical_set else {
        return Ok(None);
    };
    let cfg = SolverConfig::default();
    let n = desc.problem.n();
    let mut out = CriticalSetAgreement {
        on_checked: 0,
        on_failures: 0,
        off_checked: 0,
        off_failures: 0,
    };
    for i in 0..samples {
        let mut rng = trial_rng(seed, i as u64);
        let x = set.sample_on(&mut rng);
        let (critical, _) = solver::is_critical(&desc.problem.jacobian(&x)?, &cfg)?;
        out.on_checked += 1;
        out.on_failures += usize::from(!critical);
    }
    for i in 0..samples {
        let mut rng = trial_rng(seed, (samples + i) as u64);
        let Some(x) = set.sample_off(&mut rng, n, OFF_SET_DISTANCE) else {
            break;
        };
        let (critical, _) = solver::is_critical(&desc.problem.jacobian(&x)?, &cfg)?;
        out.off_checked += 1;
        out.off_failures += usize::from(critical);
    }
    Ok(Some(out))
}

/// Worst ratio of production/oracle disagreement to the allowed tolerance,
/// for α (`1e-4·max(1, ‖J‖²)`) and v (`1e-2·max(1, ‖J‖)`).
pub fn subproblem_agreement(
    desc: &ProblemDescriptor,
    points: usize,
    seed: u64,
) -> Result<(f64, f64, usize), ObjectiveError> {
    let cfg = SubproblemConfig::default();
    let (mut worst_alpha, mut worst_v, mut failures) = (0.0f64, 0.0f64, 0);
    for i in 0..points {
        let mut rng = trial_rng(seed, i as u64);
        let x = desc.sampling_box.sample(&mut rng, desc.problem.n());
        let jac = desc.problem.jacobian(&x)?;
        let reference = match oracle::brute_force_direction(&jac, &GridSpec::for_criteria(jac.rows())) {
            Ok(d) => d,
            Err(_) => oracle::face_enumeration_direction(&jac),
        };
        let d = match direction::solve_exact(&jac, &cfg) {
            Ok(d) if d.status != SubproblemStatus::MaxInnerExceeded => d,
            _ => {
                failures += 1;
                continue;
            }
        };
        let norm = oracle::operator_norm(&jac);
        let alpha_err = (d.alpha_upper - reference.alpha).abs() / (1e-4 * norm.powi(2).max(1.0));
        let dv: Vec<f64> = d.v.iter().zip(&reference.v).map(|(a, b)| a - b).collect();
        let v_err = norm_sq(&dv).sqrt() / (1e-2 * norm.max(1.0));
        worst_alpha = worst_alpha.max(alpha_err);
        worst_v = worst_v.max(v_err);
    }
    Ok((worst_alpha, worst_v, failures))
}

/// Largest relative deviation between the analytic and central-difference
/// Jacobians, or `None` without an analytic Jacobian.
pub fn jacobian_deviation(desc: &ProblemDescriptor, points: usize, seed: u64) -> Result<Option<f64>, ObjectiveError> {
    if !desc.problem.has_analytic_jacobian() {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for i in 0..points {
        let mut rng = trial_rng(seed, i as u64);
        let x = desc.sampling_box.sample(&mut rng, desc.problem.n());
        let analytic = desc.problem.jacobian(&x)?;
        let fd = oracle::finite_diff_jacobian(&desc.problem, &x, 1e-6).map_err(|e| match e {
            oracle::OracleError::Objective(e) => e,
            other => unreachable!("{other}"),
        })?;
        for (a, b) in analytic.as_row_major().iter().zip(fd.as_row_major()) {
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Ok(Some(worst))
}

pub fn verify_problem(desc: &ProblemDescriptor, seed: u64) -> Result<VerifyReport, solver::SolverError> {
    let p = &desc.problem;
    let class = desc.convexity_class;
    let bx = &desc.sampling_box;
    let mut checks = vec![
        sampler_check("quasiconvex_segments", class.is_quasiconvex(), || {
            oracle::sample_quasiconvex_in(p, bx, SAMPLER_TRIALS, sub_seed(seed, 0))
        })?,
        sampler_check("gradient_characterization", class.is_pseudoconvex(), || {
            oracle::check_gradient_characterization_in(p, bx, SAMPLER_TRIALS, sub_seed(seed, 1))
        })?,
        sampler_check("pseudoconvex_implication", class.is_pseudoconvex(), || {
            oracle::check_pseudoconvex_in(p, bx, SAMPLER_TRIALS, sub_seed(seed, 2))
        })?,
        sampler_check("convex_gradient_inequality", class == ConvexityClass::Convex, || {
            oracle::check_convex_in(p, bx, SAMPLER_TRIALS, sub_seed(seed, 3))
        })?,
    ];

    checks.push(
        match critical_set_agreement(desc, CRITICAL_SAMPLES, sub_seed(seed, 4))? {
            None => VerifyCheck {
                name: "critical_set",
                state: CheckState::Skipped,
                detail: "no known critical set".to_string(),
            },
            Some(a) => VerifyCheck {
                name: "critical_set",
                state: if a.on_failures == 0 && a.off_failures == 0 {
                    CheckState::Pass
                } else {
                    CheckState::Fail
                },
                detail: format!(
                    "on-set {}/{} critical, off-set {}/{} non-critical",
                    a.on_checked - a.on_failures,
                    a.on_checked,
                    a.off_checked - a.off_failures,
                    a.off_checked
                ),
            },
        },
    );

    let (alpha_ratio, v_ratio, failures) = subproblem_agreement(desc, AGREEMENT_POINTS, sub_seed(seed, 5))?;
    checks.push(VerifyCheck {
        name: "subproblem_agreement",
        state: if alpha_ratio <= 1.0 && v_ratio <= 1.0 && failures == 0 {
            CheckState::Pass
        } else {
            CheckState::Fail
        },
        detail: format!(
            "{AGREEMENT_POINTS} points, worst alpha error {alpha_ratio:.3e} and v error {v_ratio:.3e} of tolerance, {failures} solver failures"
        ),
    });

    checks.push(match jacobian_deviation(desc, JACOBIAN_POINTS, sub_seed(seed, 6))? {
        None => VerifyCheck {
            name: "jacobian_finite_difference",
            state: CheckState::Skipped,
            detail: "no analytic Jacobian".to_string(),
        },
        Some(dev) => VerifyCheck {
            name: "jacobian_finite_difference",
            state: if dev <= JACOBIAN_RTOL {
                CheckState::Pass
            } else {
                CheckState::Fail
            },
            detail: format!("{JACOBIAN_POINTS} points, worst relative deviation {dev:.3e}"),
        },
    });

    let all_passed = checks.iter().all(|c| c.state != CheckState::Fail);
    Ok(VerifyReport {
        problem: desc.name.to_string(),
        seed,
        convexity_class: class,
        checks,
        all_passed,
    })
}
