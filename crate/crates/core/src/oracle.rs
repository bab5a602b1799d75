//! Independent reference computations used to validate the production paths.
//!
//! Nothing here shares code with the dual projected-gradient solver: the
//! subproblem oracles enumerate the simplex (on a grid, or face by face), the
//! Jacobian oracle uses central differences, and the convexity and
//! weak-Pareto checks are sampling tests.
//!
//! All samplers are deterministic given a seed. Trial `i` draws from a
//! ChaCha8 stream selected by `(seed, i)`, so the samples do not depend on
//! evaluation order or platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::objective::{central_difference, dot, norm_sq, Jacobian, MultiObjective, ObjectiveError};

/// Componentwise slack for the sampling checks.
pub const SAMPLING_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid oracle supports at most 4 criteria, got {0}")]
    TooManyCriteria(usize),
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Simplex grid for the brute-force direction oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: f64,
    /// Each round shrinks the step tenfold around the incumbent.
    pub refinement_rounds: usize,
}

impl GridSpec {
    pub fn for_criteria(m: usize) -> Self {
        let resolution = match m {
            0..=2 => 1e-3,
            3 => 1e-2,
            _ => 2e-2,
        };
        GridSpec {
            resolution,
            refinement_rounds: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDirection {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    /// `−½‖Jᵀw‖²` at the returned weights.
    pub alpha: f64,
}

fn dual_objective(jac: &Jacobian, w: &[f64]) -> f64 {
    0.5 * norm_sq(&jac.tr_mul_vec(w))
}

fn oracle_direction(jac: &Jacobian, w: Vec<f64>) -> OracleDirection {
    let jtw = jac.tr_mul_vec(&w);
    OracleDirection {
        alpha: -0.5 * norm_sq(&jtw),
        v: jtw.into_iter().map(|c| -c).collect(),
        w,
    }
}

/// Visits every composition `k_1 + … + k_m = total`.
fn for_each_composition(m: usize, total: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(parts: &mut Vec<usize>, m: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if parts.len() == m - 1 {
            parts.push(left);
            f(parts);
            parts.pop();
            return;
        }
        for k in 0..=left {
            parts.push(k);
            rec(parts, m, left - k, f);
            parts.pop();
        }
    }
    rec(&mut Vec::with_capacity(m), m, total, f);
}

/// Minimizes `½‖Jᵀw‖²` over a simplex grid, then refines around the best
/// grid point.
pub fn brute_force_direction(jac: &Jacobian, spec: &GridSpec) -> Result<OracleDirection, OracleError> {
    let m = jac.rows();
    if m > 4 {
        return Err(OracleError::TooManyCriteria(m));
    }
    if !(spec.resolution > 0.0 && spec.resolution.is_finite()) {
        return Err(OracleError::InvalidResolution);
    }
    if m == 1 {
        return Ok(oracle_direction(jac, vec![1.0]));
    }
    let total = (1.0 / spec.resolution).round().max(1.0) as usize;
    let mut best_w = vec![1.0 / m as f64; m];
    let mut best = dual_objective(jac, &best_w);
    for_each_composition(m, total, &mut |parts| {
        let w: Vec<f64> = parts.iter().map(|&k| k as f64 / total as f64).collect();
        let value = dual_objective(jac, &w);
        if value < best {
            best = value;
            best_w = w;
        }
    });

    let mut step = 1.0 / total as f64;
    for _ in 0..spec.refinement_rounds {
        step /= 10.0;
        let center = best_w.clone();
        let mut offsets = vec![-10i32; m - 1];
        loop {
            let mut w = Vec::with_capacity(m);
            for (c, o) in center.iter().zip(&offsets) {
                w.push(c + *o as f64 * step);
            }
            let last = 1.0 - w.iter().sum::<f64>();
            w.push(if last < 0.0 && last > -1e-14 { 0.0 } else { last });
            if w.iter().all(|c| *c >= 0.0) {
                let value = dual_objective(jac, &w);
                if value < best {
                    best = value;
                    best_w = w;
                }
            }
            // odometer over [-10, 10]^{m-1}
            let mut pos = 0;
            while pos < offsets.len() && offsets[pos] == 10 {
                offsets[pos] = -10;
                pos += 1;
            }
            if pos == offsets.len() {
                break;
            }
            offsets[pos] += 1;
        }
    }
    Ok(oracle_direction(jac, best_w))
}

/// Solves `A·c = b` for a small dense system by Gaussian elimination with
/// partial pivoting. Returns `None` when `A` is numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return if k == 0 { Some(vec![]) } else { None };
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (dst, src) in bottom[0][col..k].iter_mut().zip(&top[col][col..k]) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut c = vec![0.0; k];
    for row in (0..k).rev() {
        let tail: f64 = (row + 1..k).map(|j| a[row][j] * c[j]).sum();
        c[row] = (b[row] - tail) / a[row][row];
    }
    Some(c)
}

/// Exact subproblem solution by enumerating the faces of the simplex.
///
/// For each support set the minimum-norm point of the affine hull of the
/// selected gradients is found from its normal equations; feasible
/// candidates (all weights non-negative) are compared and the best is
/// returned. Affinely dependent supports are skipped since a smaller support
/// attains the same point. Practical for `m ≤ 10`.
pub fn face_enumeration_direction(jac: &Jacobian) -> OracleDirection {
    let m = jac.rows();
    assert!((1..=16).contains(&m), "face enumeration needs 1 ≤ m ≤ 16");
    let rows: Vec<&[f64]> = (0..m).map(|i| jac.row(i)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let base = rows[support[0]];
        let diffs: Vec<Vec<f64>> = support[1..]
            .iter()
            .map(|&i| rows[i].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let k = diffs.len();
        let gram: Vec<Vec<f64>> = (0..k)
            .map(|r| (0..k).map(|c| dot(&diffs[r], &diffs[c])).collect())
            .collect();
        let rhs: Vec<f64> = diffs.iter().map(|d| -dot(d, base)).collect();
        let Some(coef) = solve_dense(gram, rhs) else {
            continue;
        };
        let mut w = vec![0.0; m];
        w[support[0]] = 1.0 - coef.iter().sum::<f64>();
        for (&i, c) in support[1..].iter().zip(&coef) {
            w[i] = *c;
        }
        if w.iter().any(|c| *c < -1e-12) {
            continue;
        }
        w.iter_mut().for_each(|c| *c = c.max(0.0));
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|c| *c /= sum);
        let value = dual_objective(jac, &w);
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, w));
        }
    }
    let (_, w) = best.expect("every vertex is a feasible face");
    oracle_direction(jac, w)
}

/// Spectral norm `‖J‖₂` by power iteration on `JᵀJ`.
pub fn operator_norm(jac: &Jacobian) -> f64 {
    let n = jac.cols();
    let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let len = norm_sq(&u).sqrt();
        if len == 0.0 {
            return 0.0;
        }
        u.iter_mut().for_each(|c| *c /= len);
        let ju = jac.mul_vec(&u);
        estimate = norm_sq(&ju).sqrt();
        u = jac.tr_mul_vec(&ju);
    }
    estimate.max(jac.as_row_major().iter().fold(0.0f64, |a, c| a.max(c.abs())))
}

/// Central-difference Jacobian with a uniform step `h`. Flagged approximate.
pub fn finite_diff_jacobian(problem: &MultiObjective, x: &[f64], h: f64) -> Result<Jacobian, OracleError> {
    assert!(h > 0.0, "finite-difference step must be positive");
    if x.len() != problem.n() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: problem.n(),
            got: x.len(),
        }
        .into());
    }
    let steps = vec![h; problem.n()];
    Ok(central_difference(problem, x, &steps)?.with_approximate(true))
}

/// Sufficient σ-condition for scalarization-compatible directions:
/// `max_i ⟨∇f_i, v⟩ ≤ −(1 − σ/2)‖v‖²`.
pub fn alternative_sigma_condition(jac: &Jacobian, v: &[f64], sigma: f64) -> bool {
    let top = jac.mul_vec(v).into_iter().fold(f64::NEG_INFINITY, f64::max);
    top <= -(1.0 - 0.5 * sigma) * norm_sq(v)
}

/// Axis-aligned sampling box `[lo, hi]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SamplingBox {
    fn default() -> Self {
        SamplingBox { lo: -10.0, hi: 10.0 }
    }
}

impl SamplingBox {
    pub fn symmetric(half_width: f64) -> Self {
        SamplingBox {
            lo: -half_width,
            hi: half_width,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(self.lo..=self.hi)).collect()
    }
}

/// RNG for trial `trial` of a check seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Outcome of a sampling check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub trials: usize,
    /// Trials where the tested hypothesis applied (e.g. strict dominance held).
    pub applicable: usize,
    pub violations: usize,
    /// Largest violation amount seen, `0` when none.
    pub worst: f64,
    /// Sample pair of the worst violation.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

impl ViolationReport {
    fn new(trials: usize) -> Self {
        ViolationReport {
            trials,
            applicable: 0,
            violations: 0,
            worst: 0.0,
            witness: None,
        }
    }

    fn observe(&mut self, amount: f64, x: &[f64], y: &[f64]) {
        if amount > 0.0 {
            self.violations += 1;
            if amount > self.worst {
                self.worst = amount;
                self.witness = Some((x.to_vec(), y.to_vec()));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Amount by which `H((1−t)x + ty) ⪯ max{H(x), H(y)}` fails, beyond
/// [`SAMPLING_SLACK`]. Non-positive means the segment condition holds.
pub fn quasiconvex_violation(problem: &MultiObjective, x: &[f64], y: &[f64], t: f64) -> Result<f64, ObjectiveError> {
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    let (hx, hy, hz) = (problem.evaluate(x)?, problem.evaluate(y)?, problem.evaluate(&z)?);
    Ok(hz
        .iter()
        .zip(hx.iter().zip(&hy))
        .map(|(z, (a, b))| z - a.max(*b) - SAMPLING_SLACK)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| u < v)
}

fn directional(jac: &Jacobian, x: &[f64], y: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    jac.mul_vec(&d)
}

/// Segment test of componentwise quasi-convexity on random pairs in `bx`.
pub fn sample_quasiconvex_in(
    problem: &MultiObjective,
    bx: &SamplingBox,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    assert!(trials >= 1, "need at least one trial");
    let mut report = ViolationReport::new(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let x = bx.sample(&mut rng, problem.n());
        let y = bx.sample(&mut rng, problem.n());
        let t: f64 = rng.random_range(0.0..=1.0);
        report.applicable += 1;
        report.observe(quasiconvex_violation(problem, &x, &y, t)?, &x, &y);
    }
    Ok(report)
}

pub fn sample_quasiconvex(
    problem: &MultiObjective,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    sample_quasiconvex_in(problem, &SamplingBox::default(), trials, seed)
}

/// Gradient characterization of quasi-convexity: whenever `H(y) ≺ H(x)`,
/// require `JH(x)(y − x) ⪯ 1e-10`.
pub fn check_gradient_characterization_in(
    problem: &MultiObjective,
    bx: &SamplingBox,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    assert!(trials >= 1, "need at least one trial");
    let mut report = ViolationReport::new(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let x = bx.sample(&mut rng, problem.n());
        let y = bx.sample(&mut rng, problem.n());
        let (hx, hy) = (problem.evaluate(&x)?, problem.evaluate(&y)?);
        if !strictly_dominates(&hy, &hx) {
            continue;
        }
        report.applicable += 1;
        let slope = directional(&problem.jacobian(&x)?, &x, &y);
        let worst = slope
            .iter()
            .map(|s| s - SAMPLING_SLACK)
            .fold(f64::NEG_INFINITY, f64::max);
        report.observe(worst, &x, &y);
    }
    Ok(report)
}

pub fn check_gradient_characterization(
    problem: &MultiObjective,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    check_gradient_characterization_in(problem, &SamplingBox::default(), trials, seed)
}

/// Pseudo-convexity: `JH(x)(y − x) ⊀ 0 ⇒ H(y) ⊀ H(x)`. A violation is a pair
/// with `H(y) ≺ H(x) − 1e-10` although some directional derivative is
/// non-negative.
pub fn check_pseudoconvex_in(
    problem: &MultiObjective,
    bx: &SamplingBox,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    assert!(trials >= 1, "need at least one trial");
    let mut report = ViolationReport::new(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let x = bx.sample(&mut rng, problem.n());
        let y = bx.sample(&mut rng, problem.n());
        let slope = directional(&problem.jacobian(&x)?, &x, &y);
        if slope.iter().all(|s| *s < 0.0) {
            continue;
        }
        report.applicable += 1;
        let (hx, hy) = (problem.evaluate(&x)?, problem.evaluate(&y)?);
        // H(y) ≺ H(x) by more than the slack in every component
        let margin = hx
            .iter()
            .zip(&hy)
            .map(|(a, b)| a - b - SAMPLING_SLACK)
            .fold(f64::INFINITY, f64::min);
        report.observe(margin, &x, &y);
    }
    Ok(report)
}

/// Convexity via the gradient inequality `JH(x)(y − x) ⪯ H(y) − H(x)`.
pub fn check_convex_in(
    problem: &MultiObjective,
    bx: &SamplingBox,
    trials: usize,
    seed: u64,
) -> Result<ViolationReport, ObjectiveError> {
    assert!(trials >= 1, "need at least one trial");
    let mut report = ViolationReport::new(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let x = bx.sample(&mut rng, problem.n());
        let y = bx.sample(&mut rng, problem.n());
        let (hx, hy) = (problem.evaluate(&x)?, problem.evaluate(&y)?);
        let slope = directional(&problem.jacobian(&x)?, &x, &y);
        report.applicable += 1;
        let worst = slope
            .iter()
            .zip(hx.iter().zip(&hy))
            .map(|(s, (a, b))| s - (b - a) - SAMPLING_SLACK * (1.0 + a.abs().max(b.abs())))
            .fold(f64::NEG_INFINITY, f64::max);
        report.observe(worst, &x, &y);
    }
    Ok(report)
}

/// Samples the ball of `radius` around `x_star` and reports whether no sample
/// strictly dominates `F(x_star)` by more than 1e-10 in every component.
///
/// This is a sampling test for local weak Pareto optimality, not a proof.
pub fn check_weak_pareto_local(
    problem: &MultiObjective,
    x_star: &[f64],
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<bool, ObjectiveError> {
    assert!(trials >= 1 && radius > 0.0, "need trials ≥ 1 and radius > 0");
    let f_star = problem.evaluate(x_star)?;
    let n = problem.n();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        // rejection sampling from the enclosing cube
        let offset = loop {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..=radius)).collect();
            if norm_sq(&d) <= radius * radius {
                break d;
            }
        };
        let y: Vec<f64> = x_star.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let fy = problem.evaluate(&y)?;
        if fy.iter().zip(&f_star).all(|(a, b)| *a < b - SAMPLING_SLACK) {
            return Ok(false);
        }
    }
    Ok(true)
}
