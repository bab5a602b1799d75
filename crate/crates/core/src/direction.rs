//! Steepest-descent direction subproblem.
//!
//! The primal problem `min_v max_i ⟨∇f_i(x), v⟩ + ½‖v‖²` is solved through its
//! dual over the unit simplex,
//!
//! ```text
//! min_{w ∈ Δ} ½‖Jᵀw‖²,     v = −Jᵀw,
//! ```
//!
//! by projected gradient. After each projected step the iterate is replaced
//! by the exact minimizer over the affine hull of its support, clipped back
//! into the simplex, whenever that does not increase the dual objective;
//! this finishes ill-conditioned duals in a few iterations. Every iterate `w` yields a scalarization-compatible
//! candidate `v = −Jᵀw` together with a bracket on the optimal value `α(x)`:
//!
//! * `alpha_lower = −½‖v‖²` is the dual value, so `alpha_lower ≤ α(x)`;
//! * `max_i (Jv)_i + ½‖v‖²` is the primal value of `v`, so it bounds `α(x)`
//!   from above. Since `v = 0` is always feasible with value zero,
//!   `alpha_upper` is reported as the smaller of the primal value and zero,
//!   but never below `alpha_lower`.
//!
//! The σ-approximate solver stops as soon as
//! `primal(v) ≤ (1 − σ)·alpha_lower`, which implies
//! `primal(v) ≤ (1 − σ)·α(x)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{dot, norm_sq, Jacobian};

/// Iterations of the power method used to estimate `‖JJᵀ‖`.
const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DirectionError {
    #[error("sigma must lie in [0, 1), got {0}")]
    InvalidSigma(f64),
    #[error("invalid subproblem configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("jacobian has no rows")]
    EmptyJacobian,
    #[error("direction has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in the dual iteration")]
    NonFinite,
}

/// Weights on the unit simplex `Δ_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    /// Validates `w ≥ 0` and `Σw = 1` within [`Self::SUM_TOLERANCE`].
    pub fn new(w: Vec<f64>) -> Option<Self> {
        let sum: f64 = w.iter().sum();
        let ok =
            !w.is_empty() && w.iter().all(|v| v.is_finite() && *v >= 0.0) && (sum - 1.0).abs() <= Self::SUM_TOLERANCE;
        ok.then_some(SimplexWeights(w))
    }

    pub fn barycenter(m: usize) -> Self {
        SimplexWeights(vec![1.0 / m as f64; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices carrying positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Euclidean projection onto the unit simplex.
///
/// Sort-based: with `y` sorted decreasingly, `τ = (Σ_{i≤ρ} y_i − 1)/ρ` where `ρ`
/// is the largest index with `y_ρ > τ_ρ`, and the projection is
/// `max(y_i − τ, 0)`.
pub fn project_simplex(y: &[f64]) -> SimplexWeights {
    assert!(!y.is_empty(), "cannot project onto an empty simplex");
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    SimplexWeights(y.iter().map(|&v| (v - tau).max(0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemConfig {
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    /// Cap on projected-gradient iterations.
    pub max_inner: usize,
    /// The subproblem reports criticality once `alpha_lower ≥ −eps_critical`.
    pub eps_critical: f64,
}

impl Default for SubproblemConfig {
    fn default() -> Self {
        SubproblemConfig {
            tol_gap: 1e-10,
            max_inner: 10_000,
            eps_critical: 1e-12,
        }
    }
}

impl SubproblemConfig {
    pub fn validate(&self) -> Result<(), DirectionError> {
        if !(self.tol_gap > 0.0 && self.tol_gap.is_finite()) {
            return Err(DirectionError::InvalidConfig("tol_gap must be positive"));
        }
        if self.max_inner == 0 {
            return Err(DirectionError::InvalidConfig("max_inner must be positive"));
        }
        if !(self.eps_critical > 0.0 && self.eps_critical.is_finite()) {
            return Err(DirectionError::InvalidConfig("eps_critical must be positive"));
        }
        Ok(())
    }
}

/// Why the dual iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    /// Duality gap below `tol_gap` relative to `|alpha_lower|`, plus a
    /// floor for the rounding error of the computed gap.
    Converged,
    /// σ-certificate `primal ≤ (1 − σ)·alpha_lower` met.
    Certified,
    /// `alpha_lower ≥ −eps_critical`: the point is (numerically) Pareto critical.
    Critical,
    /// `max_inner` reached; the best iterate is returned uncertified.
    MaxInnerExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult {
    /// `v = −Jᵀ·weights`.
    pub v: Vec<f64>,
    /// Dual value `−½‖v‖²`.
    pub alpha_lower: f64,
    /// `min(primal(v), 0)`.
    pub alpha_upper: f64,
    /// Primal value `max_i (Jv)_i + ½‖v‖²` of the returned candidate.
    pub primal: f64,
    pub weights: SimplexWeights,
    pub sigma_certified: bool,
    pub critical: bool,
    pub inner_iterations: usize,
    pub status: SubproblemStatus,
}

impl DirectionResult {
    pub fn gap(&self) -> f64 {
        self.primal - self.alpha_lower
    }

    pub fn norm_v(&self) -> f64 {
        norm_sq(&self.v).sqrt()
    }

    /// Indices `i` with `(Jv)_i` within `tol` of the maximum, the active set
    /// `S(x, v)`.
    pub fn active_criteria(&self, jac: &Jacobian, tol: f64) -> Vec<usize> {
        let jv = jac.mul_vec(&self.v);
        let top = max_entry(&jv);
        (0..jv.len()).filter(|&i| jv[i] >= top - tol).collect()
    }
}

/// `max_i ⟨∇f_i, v⟩ + ½‖v‖²`.
pub fn primal_value(jac: &Jacobian, v: &[f64]) -> f64 {
    max_entry(&jac.mul_vec(v)) + 0.5 * norm_sq(v)
}

fn max_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Copy)]
enum StopRule {
    Gap,
    Sigma(f64),
}

struct Candidate {
    w: Vec<f64>,
    v: Vec<f64>,
    primal: f64,
    dual: f64,
    /// Bound on the rounding error of the computed gap.
    gap_floor: f64,
}

impl Candidate {
    fn at(jac: &Jacobian, w: Vec<f64>) -> Self {
        let v: Vec<f64> = jac.tr_mul_vec(&w).into_iter().map(|c| -c).collect();
        let jv = jac.mul_vec(&v);
        let half_sq = 0.5 * norm_sq(&v);
        // |fl(Jv)_i − (Jv)_i| ≤ nε·Σ_j|J_ij v_j|, and v_j itself carries an
        // mε·Σ_k w_k|J_kj| error that enters (Jv)_i through |J_ij|
        let spread: Vec<f64> = (0..jac.cols())
            .map(|j| (0..jac.rows()).map(|k| w[k] * jac.row(k)[j].abs()).sum())
            .collect();
        let magnitude = (0..jac.rows())
            .map(|i| {
                jac.row(i)
                    .iter()
                    .zip(&v)
                    .zip(&spread)
                    .map(|((a, b), s)| a.abs() * (b.abs() + s))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let dims = (jac.rows() + jac.cols()) as f64;
        Candidate {
            primal: max_entry(&jv) + half_sq,
            dual: -half_sq,
            gap_floor: 8.0 * dims * f64::EPSILON * magnitude,
            w,
            v,
        }
    }
}

/// Power-method estimate of `λ_max(JJᵀ)`.
fn lipschitz_estimate(jac: &Jacobian) -> f64 {
    let m = jac.rows();
    // start away from the barycenter, which is orthogonal to the top
    // eigenvector for antiparallel gradient pairs
    let mut q: Vec<f64> = (0..m).map(|i| 1.0 + i as f64).collect();
    let mut rayleigh = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = norm_sq(&q).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        q.iter_mut().for_each(|c| *c /= norm);
        let gq = jac.mul_vec(&jac.tr_mul_vec(&q));
        rayleigh = dot(&q, &gq);
        q = gq;
    }
    if rayleigh > 0.0 && rayleigh.is_finite() {
        rayleigh
    } else {
        let trace = jac.frobenius_sq();
        if trace > 0.0 {
            trace
        } else {
            1.0
        }
    }
}

/// Exact minimizer of `½‖Jᵀu‖²` over the affine hull of the support of `w`,
/// clipped back to the simplex along the segment from `w`.
///
/// Rows are expressed relative to the heaviest supported row so that a large
/// common gradient component does not swamp the normal equations.
fn face_step(jac: &Jacobian, w: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    if support.len() < 2 {
        return None;
    }
    let r = *support.iter().max_by(|&&a, &&b| w[a].total_cmp(&w[b]))?;
    let others: Vec<usize> = support.iter().copied().filter(|&i| i != r).collect();
    let base = jac.row(r);
    let diffs: Vec<Vec<f64>> = others
        .iter()
        .map(|&i| jac.row(i).iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let k = diffs.len();
    let mut gram = vec![vec![0.0; k + 1]; k];
    for a in 0..k {
        for b in 0..k {
            gram[a][b] = dot(&diffs[a], &diffs[b]);
        }
        gram[a][k] = -dot(&diffs[a], base);
    }
    let mu = gauss_solve(gram)?;
    let mut u = vec![0.0; w.len()];
    u[r] = 1.0 - mu.iter().sum::<f64>();
    for (&i, m) in others.iter().zip(&mu) {
        u[i] = *m;
    }
    // largest θ ∈ (0, 1] keeping w + θ(u − w) ≥ 0
    let mut theta = 1.0f64;
    let mut blocking = None;
    for i in 0..w.len() {
        if u[i] < 0.0 {
            let t = w[i] / (w[i] - u[i]);
            if t < theta {
                theta = t;
                blocking = Some(i);
            }
        }
    }
    let mut next: Vec<f64> = w.iter().zip(&u).map(|(a, b)| (a + theta * (b - a)).max(0.0)).collect();
    if let Some(i) = blocking {
        next[i] = 0.0;
    }
    let sum: f64 = next.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        return None;
    }
    next.iter_mut().for_each(|c| *c /= sum);
    Some(next)
}

/// Gaussian elimination with partial pivoting on an augmented `k × (k+1)`
/// system; `None` when numerically singular.
fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (dst, src) in bottom[0][col..=k].iter_mut().zip(&top[col][col..=k]) {
                *dst -= f * src;
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][k] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn finish(c: Candidate, status: SubproblemStatus, certified: bool, iters: usize, eps: f64) -> DirectionResult {
    DirectionResult {
        alpha_lower: c.dual,
        // α ≥ dual value exactly; a primal value below it is rounding
        alpha_upper: c.primal.max(c.dual).min(0.0),
        primal: c.primal,
        critical: c.dual >= -eps,
        sigma_certified: certified,
        inner_iterations: iters,
        status,
        weights: SimplexWeights(c.w),
        v: c.v,
    }
}

fn solve_dual(jac: &Jacobian, rule: StopRule, cfg: &SubproblemConfig) -> Result<DirectionResult, DirectionError> {
    cfg.validate()?;
    let m = jac.rows();
    if m == 0 {
        return Err(DirectionError::EmptyJacobian);
    }
    let mut lipschitz = lipschitz_estimate(jac);
    let mut current = Candidate::at(jac, SimplexWeights::barycenter(m).into_vec());
    let mut best: Option<Candidate> = None;
    let mut iters = 0;

    loop {
        if !(current.primal.is_finite() && current.dual.is_finite()) {
            return Err(DirectionError::NonFinite);
        }
        let gap = current.primal - current.dual;
        let gap_met = gap <= cfg.tol_gap * current.dual.abs().max(1e-300) + current.gap_floor;
        if current.dual >= -cfg.eps_critical {
            let certified = match rule {
                StopRule::Gap => gap_met,
                StopRule::Sigma(sigma) => current.primal <= (1.0 - sigma) * current.dual,
            };
            return Ok(finish(
                current,
                SubproblemStatus::Critical,
                certified,
                iters,
                cfg.eps_critical,
            ));
        }
        match rule {
            StopRule::Sigma(sigma) if current.primal <= (1.0 - sigma) * current.dual => {
                return Ok(finish(
                    current,
                    SubproblemStatus::Certified,
                    true,
                    iters,
                    cfg.eps_critical,
                ));
            }
            _ => {}
        }
        if gap_met {
            // under the σ rule, convergence alone does not certify
            let certified = matches!(rule, StopRule::Gap);
            return Ok(finish(
                current,
                SubproblemStatus::Converged,
                certified,
                iters,
                cfg.eps_critical,
            ));
        }
        if best.as_ref().is_none_or(|b| current.primal < b.primal) {
            best = Some(Candidate {
                w: current.w.clone(),
                v: current.v.clone(),
                ..current
            });
        }
        if iters >= cfg.max_inner {
            let b = best.expect("best iterate recorded");
            return Ok(finish(
                b,
                SubproblemStatus::MaxInnerExceeded,
                false,
                iters,
                cfg.eps_critical,
            ));
        }

        // ∇(½‖Jᵀw‖²) = JJᵀw = −Jv
        let grad: Vec<f64> = jac.mul_vec(&current.v).into_iter().map(|c| -c).collect();
        let next_w = loop {
            let trial: Vec<f64> = current.w.iter().zip(&grad).map(|(w, g)| w - g / lipschitz).collect();
            let next = project_simplex(&trial).into_vec();
            let d: Vec<f64> = next.iter().zip(&current.w).map(|(a, b)| a - b).collect();
            let d_sq = norm_sq(&d);
            let curvature = norm_sq(&jac.tr_mul_vec(&d));
            // descent lemma for the quadratic: ‖Jᵀd‖² ≤ L‖d‖²
            if d_sq == 0.0 || curvature <= lipschitz * d_sq * (1.0 + 1e-9) {
                break next;
            }
            lipschitz = (2.0 * lipschitz).max(curvature / d_sq);
        };
        iters += 1;
        let mut next = Candidate::at(jac, next_w);
        if let Some(face) = face_step(jac, &next.w) {
            let candidate = Candidate::at(jac, face);
            if candidate.dual >= next.dual {
                next = candidate;
            }
        }
        current = next;
    }
}

/// Solves the direction subproblem to the relative gap tolerance.
pub fn solve_exact(jac: &Jacobian, cfg: &SubproblemConfig) -> Result<DirectionResult, DirectionError> {
    solve_dual(jac, StopRule::Gap, cfg)
}

/// Produces a σ-approximate direction by stopping the dual iteration at the
/// first iterate with `primal ≤ (1 − σ)·alpha_lower`. With `σ = 0` this is
/// [`solve_exact`].
pub fn solve_sigma_approx(
    jac: &Jacobian,
    sigma: f64,
    cfg: &SubproblemConfig,
) -> Result<DirectionResult, DirectionError> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(DirectionError::InvalidSigma(sigma));
    }
    if sigma == 0.0 {
        solve_exact(jac, cfg)
    } else {
        solve_dual(jac, StopRule::Sigma(sigma), cfg)
    }
}

/// Evaluates `max_i ⟨∇f_i, v⟩ + ½‖v‖² ≤ (1 − σ)·alpha_exact` with slack
/// `1e-12·max(1, |alpha_exact|)`.
pub fn check_sigma_certificate(
    jac: &Jacobian,
    v: &[f64],
    alpha_exact: f64,
    sigma: f64,
) -> Result<bool, DirectionError> {
    if v.len() != jac.cols() {
        return Err(DirectionError::DimensionMismatch {
            expected: jac.cols(),
            got: v.len(),
        });
    }
    let slack = 1e-12 * alpha_exact.abs().max(1.0);
    Ok(primal_value(jac, v) <= (1.0 - sigma) * alpha_exact + slack)
}
