//! Builtin test problems covering convex, pseudo-convex, quasi-convex and
//! untagged objectives.
//!
//! | name             | n | m | class         | critical set                          |
//! |------------------|---|---|---------------|---------------------------------------|
//! | `quad_pair`      | 2 | 2 | convex        | segment `[a, b]`                      |
//! | `paper_cubic`    | 1 | 2 | pseudo-convex | all of `R`                            |
//! | `quasi_exp`      | 2 | 2 | quasi-convex  | segment `[d1, d2]`                    |
//! | `scalar_quad`    | 2 | 1 | convex        | `{0}`                                 |
//! | `nonconvex_demo` | 2 | 2 | none          | `x1 ∈ {-1, 0, 1}`, `x2 ∈ [0, 1]`      |

use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::objective::{norm_sq, MultiObjective};
use crate::oracle::SamplingBox;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("unknown problem `{0}` (available: quad_pair, paper_cubic, quasi_exp, scalar_quad, nonconvex_demo)")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvexityClass {
    #[serde(rename = "convex")]
    Convex,
    #[serde(rename = "pseudo-convex")]
    PseudoConvex,
    #[serde(rename = "quasi-convex")]
    QuasiConvex,
    #[serde(rename = "none")]
    None,
}

impl ConvexityClass {
    /// Convex and pseudo-convex functions are quasi-convex.
    pub fn is_quasiconvex(self) -> bool {
        !matches!(self, ConvexityClass::None)
    }

    /// Differentiable convex functions are pseudo-convex.
    pub fn is_pseudoconvex(self) -> bool {
        matches!(self, ConvexityClass::Convex | ConvexityClass::PseudoConvex)
    }
}

impl fmt::Display for ConvexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvexityClass::Convex => "convex",
            ConvexityClass::PseudoConvex => "pseudo-convex",
            ConvexityClass::QuasiConvex => "quasi-convex",
            ConvexityClass::None => "none",
        })
    }
}

type Distance = dyn Fn(&[f64]) -> f64 + Send + Sync;
type OnSetSampler = dyn Fn(&mut dyn rand::RngCore) -> Vec<f64> + Send + Sync;

/// Analytic description of the Pareto-critical set.
pub struct CriticalSet {
    pub description: &'static str,
    distance: Box<Distance>,
    on_set: Box<OnSetSampler>,
    /// Region where off-set points are drawn; `None` when the set is the
    /// whole space.
    pub off_set_region: Option<SamplingBox>,
}

impl CriticalSet {
    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.distance)(x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// A point on the set.
    pub fn sample_on(&self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        (self.on_set)(rng)
    }

    /// A point at distance at least `min_distance` from the set, or `None`
    /// when the set covers the space.
    pub fn sample_off(&self, rng: &mut impl Rng, n: usize, min_distance: f64) -> Option<Vec<f64>> {
        let region = self.off_set_region?;
        loop {
            let x = region.sample(rng, n);
            if self.distance(&x) >= min_distance {
                return Some(x);
            }
        }
    }
}

impl fmt::Debug for CriticalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CriticalSet")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub struct ProblemDescriptor {
    pub name: &'static str,
    pub problem: MultiObjective,
    pub convexity_class: ConvexityClass,
    pub known_critical_set: Option<CriticalSet>,
    pub recommended_x0: Vec<f64>,
    /// Box used by the convexity samplers.
    pub sampling_box: SamplingBox,
}

pub const PROBLEM_NAMES: [&str; 5] = ["quad_pair", "paper_cubic", "quasi_exp", "scalar_quad", "nonconvex_demo"];

pub fn get_problem(name: &str) -> Result<ProblemDescriptor, ProblemError> {
    match name {
        "quad_pair" => Ok(quad_pair([0.0, 0.0], [1.0, 0.0])),
        "paper_cubic" => Ok(paper_cubic()),
        "quasi_exp" => Ok(quasi_exp()),
        "scalar_quad" => Ok(scalar_quad()),
        "nonconvex_demo" => Ok(nonconvex_demo()),
        other => Err(ProblemError::Unknown(other.to_string())),
    }
}

fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
    let len_sq = norm_sq(&ab);
    let s = if len_sq == 0.0 {
        0.0
    } else {
        (ax.iter().zip(&ab).map(|(p, q)| p * q).sum::<f64>() / len_sq).clamp(0.0, 1.0)
    };
    ax.iter().zip(&ab).map(|(p, q)| (p - s * q).powi(2)).sum::<f64>().sqrt()
}

fn on_segment(a: [f64; 2], b: [f64; 2]) -> Box<OnSetSampler> {
    Box::new(move |rng| {
        let s: f64 = rng.random_range(0.0..=1.0);
        vec![a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    })
}

/// `F(x) = (½‖x − a‖², ½‖x − b‖²)`.
pub fn quad_pair(a: [f64; 2], b: [f64; 2]) -> ProblemDescriptor {
    let problem = MultiObjective::new(
        2,
        2,
        move |x| {
            vec![
                0.5 * ((x[0] - a[0]).powi(2) + (x[1] - a[1]).powi(2)),
                0.5 * ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2)),
            ]
        },
        move |x| vec![vec![x[0] - a[0], x[1] - a[1]], vec![x[0] - b[0], x[1] - b[1]]],
    );
    ProblemDescriptor {
        name: "quad_pair",
        problem,
        convexity_class: ConvexityClass::Convex,
        known_critical_set: Some(CriticalSet {
            description: "segment between the two centers",
            distance: Box::new(move |x| segment_distance(x, &a, &b)),
            on_set: on_segment(a, b),
            off_set_region: Some(SamplingBox::symmetric(3.0)),
        }),
        recommended_x0: vec![2.0, 2.0],
        sampling_box: SamplingBox::default(),
    }
}

/// `H(t) = (t, −t³/3)`: pseudo-convex although `−t³/3` is not; every point is
/// Pareto critical.
pub fn paper_cubic() -> ProblemDescriptor {
    let problem = MultiObjective::new(
        1,
        2,
        |t| vec![t[0], -t[0].powi(3) / 3.0],
        |t| vec![vec![1.0], vec![-t[0] * t[0]]],
    );
    ProblemDescriptor {
        name: "paper_cubic",
        problem,
        convexity_class: ConvexityClass::PseudoConvex,
        known_critical_set: Some(CriticalSet {
            description: "all of R",
            distance: Box::new(|_| 0.0),
            on_set: Box::new(|rng| vec![rng.random_range(-10.0..=10.0)]),
            off_set_region: None,
        }),
        recommended_x0: vec![5.0],
        sampling_box: SamplingBox::default(),
    }
}

const QE_D1: [f64; 2] = [0.0, 0.0];
const QE_D2: [f64; 2] = [2.0, 1.0];
const QE_SCALE: f64 = 5.0;

/// `f1 = ½‖x − d1‖²` and `f2 = λ²(1 − exp(−‖x − d2‖²/(2λ²)))`, a Gaussian well:
/// an increasing transform of a convex function, hence quasi-convex, and not
/// convex beyond radius `λ` around `d2`. Near the critical segment `f2` is
/// close to `½‖x − d2‖²`.
pub fn quasi_exp() -> ProblemDescriptor {
    fn offset(x: &[f64], d: &[f64; 2]) -> ([f64; 2], f64) {
        let diff = [x[0] - d[0], x[1] - d[1]];
        (diff, diff[0] * diff[0] + diff[1] * diff[1])
    }
    let lambda_sq = QE_SCALE * QE_SCALE;
    let problem = MultiObjective::new(
        2,
        2,
        move |x| {
            let (_, r1) = offset(x, &QE_D1);
            let (_, r2) = offset(x, &QE_D2);
            vec![0.5 * r1, lambda_sq * -(-r2 / (2.0 * lambda_sq)).exp_m1()]
        },
        move |x| {
            let (g1, _) = offset(x, &QE_D1);
            let (g2, r2) = offset(x, &QE_D2);
            let s = (-r2 / (2.0 * lambda_sq)).exp();
            vec![g1.to_vec(), vec![s * g2[0], s * g2[1]]]
        },
    );
    ProblemDescriptor {
        name: "quasi_exp",
        problem,
        convexity_class: ConvexityClass::QuasiConvex,
        known_critical_set: Some(CriticalSet {
            description: "segment between d1 = (0, 0) and d2 = (2, 1)",
            distance: Box::new(|x| segment_distance(x, &QE_D1, &QE_D2)),
            on_set: on_segment(QE_D1, QE_D2),
            off_set_region: Some(SamplingBox { lo: -2.0, hi: 4.0 }),
        }),
        recommended_x0: vec![3.0, -2.0],
        sampling_box: SamplingBox::default(),
    }
}

/// `f(x) = ½‖x‖²` on `R²`.
pub fn scalar_quad() -> ProblemDescriptor {
    let problem = MultiObjective::new(2, 1, |x| vec![0.5 * norm_sq(x)], |x| vec![x.to_vec()]);
    ProblemDescriptor {
        name: "scalar_quad",
        problem,
        convexity_class: ConvexityClass::Convex,
        known_critical_set: Some(CriticalSet {
            description: "the origin",
            distance: Box::new(|x| norm_sq(x).sqrt()),
            on_set: Box::new(|_| vec![0.0, 0.0]),
            off_set_region: Some(SamplingBox::symmetric(3.0)),
        }),
        recommended_x0: vec![1.0, -2.0],
        sampling_box: SamplingBox::default(),
    }
}

/// A double well shared by both criteria:
/// `f1 = (x1² − 1)² + x2²`, `f2 = (x1² − 1)² + (x2 − 1)²`. The critical set is
/// three parallel segments; the middle one (`x1 = 0`) is not Pareto optimal.
pub fn nonconvex_demo() -> ProblemDescriptor {
    let problem = MultiObjective::new(
        2,
        2,
        |x| {
            let well = (x[0] * x[0] - 1.0).powi(2);
            vec![well + x[1] * x[1], well + (x[1] - 1.0).powi(2)]
        },
        |x| {
            let dwell = 4.0 * x[0] * (x[0] * x[0] - 1.0);
            vec![vec![dwell, 2.0 * x[1]], vec![dwell, 2.0 * (x[1] - 1.0)]]
        },
    );
    ProblemDescriptor {
        name: "nonconvex_demo",
        problem,
        convexity_class: ConvexityClass::None,
        known_critical_set: Some(CriticalSet {
            description: "segments x1 ∈ {-1, 0, 1}, 0 ≤ x2 ≤ 1",
            distance: Box::new(|x| {
                [-1.0, 0.0, 1.0]
                    .iter()
                    .map(|c| segment_distance(x, &[*c, 0.0], &[*c, 1.0]))
                    .fold(f64::INFINITY, f64::min)
            }),
            on_set: Box::new(|rng| {
                let c = [-1.0, 0.0, 1.0][rng.random_range(0..3usize)];
                vec![c, rng.random_range(0.0..=1.0)]
            }),
            off_set_region: Some(SamplingBox::symmetric(2.0)),
        }),
        recommended_x0: vec![0.5, 2.0],
        sampling_box: SamplingBox::symmetric(2.0),
    }
}
