//! Vector objectives `F: Rⁿ → Rᵐ` with analytic or finite-difference Jacobians.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised while evaluating an objective or its Jacobian.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input coordinate at index {0}")]
    NonFiniteInput(usize),
    #[error("objective returned a non-finite value in component {0}")]
    NonFiniteValue(usize),
    #[error("jacobian has a non-finite entry at ({row}, {col})")]
    NonFiniteJacobian { row: usize, col: usize },
}

/// A point of `Rⁿ` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, ObjectiveError> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(ObjectiveError::NonFiniteInput(i));
        }
        Ok(Point(coords))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Dense `m × n` Jacobian stored row-major; row `i` is `∇f_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    approximate: bool,
}

impl Jacobian {
    /// Builds a Jacobian from row-major data. Entries must be finite.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ObjectiveError> {
        if data.len() != rows * cols {
            return Err(ObjectiveError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFiniteJacobian {
                row: p / cols.max(1),
                col: p % cols.max(1),
            });
        }
        Ok(Jacobian {
            rows,
            cols,
            data,
            approximate: false,
        })
    }

    /// Builds a Jacobian from a list of gradient rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ObjectiveError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub(crate) fn with_approximate(mut self, approximate: bool) -> Self {
        self.approximate = approximate;
        self
    }

    /// Number of criteria `m`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Input dimension `n`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the entries come from finite differences rather than an
    /// analytic Jacobian.
    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `J·v`, a vector of length `m`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `Jᵀ·w`, a vector of length `n`.
    pub fn tr_mul_vec(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(self.row(i)) {
                *o += wi * g;
            }
        }
        out
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

impl fmt::Display for Jacobian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// A continuously differentiable map `F: Rⁿ → Rᵐ`.
///
/// Immutable after construction and cheap to clone; the closures are shared.
/// When no analytic Jacobian is supplied, [`MultiObjective::jacobian`] falls
/// back to central differences with step `h_j = 1e-6·max(1, |x_j|)` and marks
/// the result as approximate.
#[derive(Clone)]
pub struct MultiObjective {
    n: usize,
    m: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

impl fmt::Debug for MultiObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiObjective")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

/// Relative step used by the finite-difference fallback.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

impl MultiObjective {
    /// Objective with an analytic Jacobian. `jac` must return `m` rows of
    /// length `n`.
    pub fn new<E, J>(n: usize, m: usize, eval: E, jac: J) -> Self
    where
        E: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        assert!(n > 0 && m > 0, "dimensions must be positive");
        MultiObjective {
            n,
            m,
            eval: Arc::new(eval),
            jac: Some(Arc::new(jac)),
        }
    }

    /// Objective served by finite differences.
    pub fn derivative_free<E>(n: usize, m: usize, eval: E) -> Self
    where
        E: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        assert!(n > 0 && m > 0, "dimensions must be positive");
        MultiObjective {
            n,
            m,
            eval: Arc::new(eval),
            jac: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.n {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|c| !c.is_finite()) {
            return Err(ObjectiveError::NonFiniteInput(i));
        }
        Ok(())
    }

    /// `F(x)` without the finiteness check on the output. Used by the line
    /// search, where overflow counts as a rejected trial rather than an error.
    pub(crate) fn evaluate_raw(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        if x.len() != self.n {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let y = (self.eval)(x);
        if y.len() != self.m {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.m,
                got: y.len(),
            });
        }
        Ok(y)
    }

    /// Evaluates `F(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_input(x)?;
        let y = self.evaluate_raw(x)?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFiniteValue(i));
        }
        Ok(y)
    }

    /// Evaluates `JF(x)`, analytically when available.
    pub fn jacobian(&self, x: &[f64]) -> Result<Jacobian, ObjectiveError> {
        self.check_input(x)?;
        match &self.jac {
            Some(jac) => {
                let rows = jac(x);
                if rows.len() != self.m {
                    return Err(ObjectiveError::DimensionMismatch {
                        expected: self.m,
                        got: rows.len(),
                    });
                }
                let j = Jacobian::from_rows(&rows)?;
                if j.cols() != self.n {
                    return Err(ObjectiveError::DimensionMismatch {
                        expected: self.n,
                        got: j.cols(),
                    });
                }
                Ok(j)
            }
            None => {
                let steps: Vec<f64> = x.iter().map(|xj| FD_RELATIVE_STEP * xj.abs().max(1.0)).collect();
                central_difference(self, x, &steps).map(|j| j.with_approximate(true))
            }
        }
    }
}

/// Central-difference Jacobian with a per-coordinate step.
pub(crate) fn central_difference(
    problem: &MultiObjective,
    x: &[f64],
    steps: &[f64],
) -> Result<Jacobian, ObjectiveError> {
    let (n, m) = (problem.n(), problem.m());
    let mut data = vec![0.0; m * n];
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = steps[j];
        probe[j] = x[j] + h;
        let fp = problem.evaluate(&probe)?;
        probe[j] = x[j] - h;
        let fm = problem.evaluate(&probe)?;
        probe[j] = x[j];
        // actual spacing, after rounding of x ± h
        let width = (x[j] + h) - (x[j] - h);
        for i in 0..m {
            data[i * n + j] = (fp[i] - fm[i]) / width;
        }
    }
    Jacobian::from_row_major(m, n, data)
}
