//! Pareto descent with inexact directions for vector optimization.
//!
//! The crate is split bottom-up: [`objective`] holds the vector-valued
//! problem and its Jacobian, [`direction`] solves the direction subproblem,
//! [`linesearch`] implements the Armijo backtracking rule, and [`solver`]
//! drives the outer loop. [`diagnostics`] checks a recorded trajectory,
//! [`problems`] is the builtin registry and [`oracle`] holds independent
//! reference implementations used by tests and the `verify` command.

pub mod cli;
pub mod diagnostics;
pub mod direction;
pub mod linesearch;
pub mod objective;
pub mod oracle;
pub mod problems;
pub mod solver;

pub use diagnostics::{summarize, DiagnosticsSummary};
pub use direction::{solve_exact, solve_sigma_approx, DirectionResult, SubproblemConfig};
pub use objective::{Jacobian, MultiObjective, ObjectiveError, Point};
pub use problems::{get_problem, ConvexityClass, ProblemDescriptor};
pub use solver::{run, RunReport, SolverConfig, Termination};
