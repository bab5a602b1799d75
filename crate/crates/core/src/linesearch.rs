//! Dyadic Armijo backtracking for vector objectives.
//!
//! The accepted step is the largest `t = 2^{-j}`, `j = 0, 1, 2, …`, with
//!
//! ```text
//! F(x + t·v) ⪯ F(x) + β·t·JF(x)v
//! ```
//!
//! in every component, compared with zero slack.

use thiserror::Error;

use crate::objective::{MultiObjective, ObjectiveError};

/// Largest backtracking exponent tried by default; `2^-60 ≈ 8.7e-19`.
pub const DEFAULT_MAX_J: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineSearchError {
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("no step 2^-j with j <= {max_j} satisfies the Armijo condition")]
    MaxBacktracks { max_j: u32 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    /// `2^{-j}`, bit-exact.
    pub t: f64,
    pub j: u32,
    /// Objective evaluations spent.
    pub trial_count: u32,
}

/// `2^{-j}` built from the exponent bits, exact for `j ≤ 1022`.
pub fn dyadic(j: u32) -> f64 {
    assert!(j <= 1022, "exponent out of normal range");
    f64::from_bits(((1023 - j) as u64) << 52)
}

/// Componentwise test of the Armijo condition at step `t`. Non-finite
/// trial values fail.
pub fn armijo_holds(trial: &[f64], fx: &[f64], jv: &[f64], beta: f64, t: f64) -> bool {
    trial
        .iter()
        .zip(fx.iter().zip(jv))
        .all(|(&ft, (&f0, &d))| ft.is_finite() && ft <= f0 + beta * t * d)
}

pub(crate) fn trial_point(x: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(v).map(|(xi, vi)| xi + t * vi).collect()
}

/// Backtracks from `t = 1` until the vector Armijo condition holds.
///
/// `fx` is `F(x)` and `jv` is `JF(x)v`, both computed by the caller.
pub fn armijo_step(
    problem: &MultiObjective,
    x: &[f64],
    fx: &[f64],
    v: &[f64],
    jv: &[f64],
    beta: f64,
    max_j: u32,
) -> Result<StepResult, LineSearchError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(LineSearchError::InvalidBeta(beta));
    }
    let m = problem.m();
    for (len, expected) in [(fx.len(), m), (jv.len(), m), (v.len(), problem.n())] {
        if len != expected {
            return Err(ObjectiveError::DimensionMismatch { expected, got: len }.into());
        }
    }
    for j in 0..=max_j {
        let t = dyadic(j);
        let xt = trial_point(x, v, t);
        // overflow and non-finite trial points count as rejections, as do
        // steps too short to move x at all
        let accepted = xt.iter().all(|c| c.is_finite())
            && xt.as_slice() != x
            && armijo_holds(&problem.evaluate_raw(&xt)?, fx, jv, beta, t);
        if accepted {
            return Ok(StepResult {
                t,
                j,
                trial_count: j + 1,
            });
        }
    }
    Err(LineSearchError::MaxBacktracks { max_j })
}
