//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;

use rand::Rng;
use serde::Serialize;

use pareto_descent::cli::artifacts::{self, ConfigEcho};
use pareto_descent::cli::config::ProblemSource;
use pareto_descent::diagnostics::{
    check_level_set, check_monotone, check_quasi_fejer, check_summability, summarize, CheckOutcome, DominatingReference,
};
use pareto_descent::direction::{solve_exact, solve_sigma_approx, SubproblemConfig};
use pareto_descent::linesearch::{armijo_holds, armijo_step, dyadic, DEFAULT_MAX_J};
use pareto_descent::oracle::{
    brute_force_direction, check_weak_pareto_local, face_enumeration_direction, operator_norm, sample_quasiconvex,
    trial_rng, GridSpec, SamplingBox,
};
use pareto_descent::problems::PROBLEM_NAMES;
use pareto_descent::{get_problem, run, Jacobian, MultiObjective, Point, RunReport, SolverConfig, Termination};

const SEED: u64 = 2_718;
/// Criticality threshold for the full-convergence criterion.
const EPS: f64 = 1e-8;
/// Distance of quad_pair finals from the segment `[(0,0), (1,0)]`.
const SEGMENT_TOL: f64 = 1e-4;
const WEAK_PARETO_SAMPLES: usize = 10_000;
/// Per-iterate agreement with the scalar gradient-descent reference.
const SCALAR_TOL: f64 = 1e-12;
/// Criticality of paper_cubic points.
const CUBIC_TOL: f64 = 1e-12;
/// Slack on the certificate and proximity bounds.
const CERT_SLACK: f64 = 1e-8;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(failures: usize, checked: usize, what: &str) -> Self {
        Verdict {
            pass: failures == 0 && checked > 0,
            detail: format!("{what}: {failures} failures in {checked} checks"),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Jacobian `i` of the seeded family: m ∈ {2, 3}, n ∈ 1..=5, entries in [−10, 10].
fn random_jacobian(stream: u64) -> Jacobian {
    let mut rng = trial_rng(SEED, stream);
    let m = rng.random_range(2..=3);
    let n = rng.random_range(1..=5);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect())
        .collect();
    Jacobian::from_rows(&rows).unwrap()
}

fn solve(p: &MultiObjective, x0: &[f64], cfg: &SolverConfig) -> RunReport {
    run(p, &Point::new(x0.to_vec()).unwrap(), cfg).unwrap()
}

fn with_sigma(sigma: f64) -> SolverConfig {
    SolverConfig {
        sigma,
        ..SolverConfig::default()
    }
}

/// One solver run of the acceptance set.
struct Run {
    label: String,
    problem: &'static str,
    x0: Vec<f64>,
    report: RunReport,
}

/// quad_pair from 20 seeded starts, scalar_quad and quasi_exp from their
/// recommended starts, each for σ ∈ {0, 0.5}.
fn acceptance_runs() -> Vec<Run> {
    let mut out = Vec::new();
    for sigma in [0.0, 0.5] {
        let cfg = with_sigma(sigma);
        let quad = get_problem("quad_pair").unwrap();
        for i in 0..20 {
            let x0 = SamplingBox::default().sample(&mut trial_rng(SEED, 1_000 + i), 2);
            out.push(Run {
                label: format!("quad_pair_s{sigma}_{i:02}"),
                problem: "quad_pair",
                report: solve(&quad.problem, &x0, &cfg),
                x0,
            });
        }
        for name in ["scalar_quad", "quasi_exp"] {
            let d = get_problem(name).unwrap();
            out.push(Run {
                label: format!("{name}_s{sigma}"),
                problem: name,
                report: solve(&d.problem, &d.recommended_x0, &cfg),
                x0: d.recommended_x0.clone(),
            });
        }
    }
    out
}

/// Subproblem correctness against the grid oracle.
fn criterion_1() -> Verdict {
    let cfg = SubproblemConfig::default();
    let mut failures = 0;
    for i in 0..200 {
        let j = random_jacobian(i);
        let r = solve_exact(&j, &cfg).unwrap();
        let grid = brute_force_direction(&j, &GridSpec::for_criteria(j.rows())).unwrap();
        let scale = operator_norm(&j).max(1.0);
        let alpha_ok = (r.alpha_upper - grid.alpha).abs() <= 1e-4 * scale * scale;
        let v_ok = dist(&r.v, &grid.v) <= 1e-2 * scale;
        // α = −½‖v‖² up to the relative gap tolerance and rounding
        let half = -0.5 * norm(&r.v).powi(2);
        let identity_ok = (r.alpha_upper - half).abs() <= cfg.tol_gap * half.abs() + 1e-12 * scale * scale;
        if !(alpha_ok && v_ok && identity_ok) {
            failures += 1;
            eprintln!("  criterion 1: jacobian {i}: alpha {alpha_ok} v {v_ok} identity {identity_ok}");
        }
    }
    Verdict::new(failures, 200, "200 seeded Jacobians")
}

/// σ-certificate soundness and proximity against the exact oracle.
fn criterion_2() -> Verdict {
    let cfg = SubproblemConfig::default();
    let (mut failures, mut checked) = (0, 0);
    for (s, sigma) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        for i in 0..100 {
            let j = random_jacobian(10_000 * (s as u64 + 1) + i);
            let r = solve_sigma_approx(&j, sigma, &cfg).unwrap();
            if !r.sigma_certified {
                continue;
            }
            checked += 1;
            let exact = face_enumeration_direction(&j);
            let slack = CERT_SLACK * exact.alpha.abs().max(1.0);
            let primal = j.mul_vec(&r.v).into_iter().fold(f64::NEG_INFINITY, f64::max) + 0.5 * norm(&r.v).powi(2);
            let cert_ok = primal <= (1.0 - sigma) * exact.alpha + slack;
            let prox_ok = dist(&r.v, &exact.v).powi(2) <= 2.0 * sigma * exact.alpha.abs() + slack;
            if !(cert_ok && prox_ok) {
                failures += 1;
                eprintln!("  criterion 2: sigma {sigma} jacobian {i}: certificate {cert_ok} proximity {prox_ok}");
            }
        }
    }
    Verdict::new(failures, checked, "certified results for σ ∈ {0.1, 0.5, 0.9}")
}

fn check_failed(label: &str, name: &str, c: &CheckOutcome) -> bool {
    if !c.ok() {
        eprintln!(
            "  {label}: {name} {:?} worst {:e} at {:?}",
            c.status, c.worst_violation, c.worst_index
        );
    }
    !c.ok()
}

/// Monotone decrease, summability and level-set membership.
fn criterion_3(runs: &[Run]) -> Verdict {
    let mut failures = 0;
    for r in runs {
        let bad = check_failed(&r.label, "monotone", &check_monotone(&r.report))
            | check_failed(&r.label, "summability", &check_summability(&r.report))
            | check_failed(&r.label, "level set", &check_level_set(&r.report));
        failures += bad as usize;
    }
    Verdict::new(failures, runs.len(), "acceptance runs")
}

/// Full convergence of quad_pair and quasi_exp.
fn criterion_4(runs: &[Run]) -> Verdict {
    let quad = get_problem("quad_pair").unwrap();
    let segment = quad.known_critical_set.as_ref().unwrap();
    let (mut failures, mut checked) = (0, 0);
    for r in runs.iter().filter(|r| r.problem != "scalar_quad") {
        checked += 1;
        let rep = &r.report;
        let d = get_problem(r.problem).unwrap();
        let alpha = face_enumeration_direction(&d.problem.jacobian(&rep.final_x).unwrap()).alpha;
        let mut ok = rep.termination == Termination::CriticalPoint && alpha.abs() <= EPS && rep.iterations() <= 10_000;
        if r.problem == "quad_pair" {
            let gap = segment.distance(&rep.final_x);
            let pareto = check_weak_pareto_local(&quad.problem, &rep.final_x, 0.5, WEAK_PARETO_SAMPLES, SEED).unwrap();
            if gap > SEGMENT_TOL || !pareto {
                eprintln!("  {}: distance {gap:e}, weak Pareto {pareto}", r.label);
                ok = false;
            }
        }
        if !ok {
            eprintln!(
                "  {}: {:?} alpha {alpha:e} after {}",
                r.label,
                rep.termination,
                rep.iterations()
            );
            failures += 1;
        }
    }
    Verdict::new(failures, checked, "quad_pair and quasi_exp runs")
}

/// Quasi-Fejér inequality with the final iterate as reference.
fn criterion_5(runs: &[Run]) -> Verdict {
    let (mut failures, mut checked) = (0, 0);
    for r in runs
        .iter()
        .filter(|r| r.problem == "quad_pair" && r.report.termination == Termination::CriticalPoint)
    {
        checked += 1;
        let reference = DominatingReference::final_iterate(&r.report).unwrap();
        failures += check_failed(&r.label, "quasi-Fejér", &check_quasi_fejer(&r.report, &reference)) as usize;
    }
    Verdict::new(failures, checked, "convergent quad_pair runs")
}

/// paper_cubic is critical everywhere, quasi-convex and weakly Pareto.
fn criterion_6() -> Verdict {
    let d = get_problem("paper_cubic").unwrap();
    let bx = SamplingBox::default();
    let (mut failures, mut checked) = (0, 0);
    for i in 0..200 {
        let x = bx.sample(&mut trial_rng(SEED, 20_000 + i), 1);
        let r = solve_exact(&d.problem.jacobian(&x).unwrap(), &SubproblemConfig::default()).unwrap();
        let run_ok = {
            let rep = solve(&d.problem, &x, &SolverConfig::default());
            rep.termination == Termination::CriticalPoint && rep.records.len() == 1 && rep.records[0].k == 0
        };
        let pareto = check_weak_pareto_local(&d.problem, &x, 1.0, 1000, SEED + i).unwrap();
        checked += 1;
        if !(r.critical && r.alpha_upper.abs() <= CUBIC_TOL && run_ok && pareto) {
            eprintln!(
                "  criterion 6: t = {}: alpha {:e} run {run_ok} weak Pareto {pareto}",
                x[0], r.alpha_upper
            );
            failures += 1;
        }
    }
    let quasi = sample_quasiconvex(&d.problem, 1000, SEED).unwrap();
    checked += 1;
    if !quasi.passed() {
        eprintln!("  criterion 6: quasi-convexity {quasi:?}");
        failures += 1;
    }
    Verdict::new(failures, checked, "sampled points and the segment sampler")
}

/// Classical gradient descent with dyadic Armijo backtracking.
fn scalar_reference(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    beta: f64,
    eps: f64,
) -> Vec<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut iterates = vec![x.clone()];
    for _ in 0..10_000 {
        let g = grad(&x);
        let gg: f64 = g.iter().map(|c| c * c).sum();
        if 0.5 * gg <= eps {
            break;
        }
        let fx = f(&x);
        let mut t = 1.0;
        loop {
            let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            if f(&y) <= fx - beta * t * gg {
                x = y;
                break;
            }
            t *= 0.5;
        }
        iterates.push(x.clone());
    }
    iterates
}

/// scalar_quad with σ = 0 reproduces gradient descent.
fn criterion_7() -> Verdict {
    let d = get_problem("scalar_quad").unwrap();
    let f = |x: &[f64]| 0.5 * x.iter().map(|c| c * c).sum::<f64>();
    let grad = |x: &[f64]| x.to_vec();
    let (mut failures, mut checked) = (0, 0);
    let mut starts = vec![d.recommended_x0.clone()];
    starts.extend((0..10).map(|i| SamplingBox::default().sample(&mut trial_rng(SEED, 30_000 + i), d.problem.n())));
    for beta in [0.5, 0.9] {
        for x0 in &starts {
            checked += 1;
            let cfg = SolverConfig {
                beta,
                ..SolverConfig::default()
            };
            let rep = solve(&d.problem, x0, &cfg);
            let reference = scalar_reference(f, grad, x0, beta, cfg.eps_critical);
            let same_len = rep.records.len() == reference.len();
            let worst = rep
                .records
                .iter()
                .zip(&reference)
                .flat_map(|(r, x)| r.x.iter().zip(x).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if !same_len || worst > SCALAR_TOL || rep.termination != Termination::CriticalPoint {
                eprintln!(
                    "  criterion 7: beta {beta} x0 {x0:?}: {} vs {} iterates, worst {worst:e}",
                    rep.records.len(),
                    reference.len()
                );
                failures += 1;
            }
        }
    }
    Verdict::new(failures, checked, "scalar_quad starts")
}

/// Armijo maximality on seeded (problem, point, certified direction) triples.
fn criterion_8() -> Verdict {
    let descriptors: Vec<_> = PROBLEM_NAMES.iter().map(|n| get_problem(n).unwrap()).collect();
    let sigmas = [0.0, 0.1, 0.5, 0.9];
    let betas = [0.1, 0.5, 0.9];
    let (mut failures, mut triples, mut draw) = (0, 0, 0u64);
    while triples < 500 {
        let mut rng = trial_rng(SEED, 40_000 + draw);
        draw += 1;
        let d = &descriptors[rng.random_range(0..descriptors.len())];
        let sigma = sigmas[rng.random_range(0..sigmas.len())];
        let beta = betas[rng.random_range(0..betas.len())];
        let x = d.sampling_box.sample(&mut rng, d.problem.n());
        let jac = d.problem.jacobian(&x).unwrap();
        let dir = solve_sigma_approx(&jac, sigma, &SubproblemConfig::default()).unwrap();
        if dir.critical || !dir.sigma_certified {
            continue;
        }
        triples += 1;
        let fx = d.problem.evaluate(&x).unwrap();
        let jv = jac.mul_vec(&dir.v);
        let step = match armijo_step(&d.problem, &x, &fx, &dir.v, &jv, beta, DEFAULT_MAX_J) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("  criterion 8: {} at {x:?}: {e}", d.name);
                failures += 1;
                continue;
            }
        };
        let at = |t: f64| {
            let y: Vec<f64> = x.iter().zip(&dir.v).map(|(a, b)| a + t * b).collect();
            armijo_holds(&d.problem.evaluate(&y).unwrap(), &fx, &jv, beta, t)
        };
        let holds = step.t == dyadic(step.j) && at(step.t);
        let maximal = step.j == 0 || !at(2.0 * step.t);
        if !(holds && maximal) {
            eprintln!(
                "  criterion 8: {} at {x:?}: j {} holds {holds} maximal {maximal}",
                d.name, step.j
            );
            failures += 1;
        }
    }
    Verdict::new(failures, triples, "triples")
}

#[derive(Serialize)]
struct SubproblemRow {
    index: u64,
    alpha_upper: f64,
    alpha_lower: f64,
    v: Vec<f64>,
    weights: Vec<f64>,
    inner_iterations: usize,
}

/// Recomputes the suite from scratch and writes every artifact under `dir`.
fn write_suite(dir: &Path) {
    for r in acceptance_runs() {
        let d = get_problem(r.problem).unwrap();
        let summary = summarize(&r.report, &d.problem, None).unwrap();
        let echo = ConfigEcho::new(
            &ProblemSource::Builtin(r.problem.to_string()),
            &r.x0,
            r.report.config,
            &r.label,
            None,
        );
        artifacts::write_run(dir.join(&r.label).to_str().unwrap(), &echo, &r.report, &summary).unwrap();
    }
    let cfg = SubproblemConfig::default();
    let rows: Vec<SubproblemRow> = (0..200)
        .map(|i| {
            let r = solve_sigma_approx(&random_jacobian(i), [0.0, 0.1, 0.5, 0.9][i as usize % 4], &cfg).unwrap();
            SubproblemRow {
                index: i,
                alpha_upper: r.alpha_upper,
                alpha_lower: r.alpha_lower,
                inner_iterations: r.inner_iterations,
                weights: r.weights.as_slice().to_vec(),
                v: r.v,
            }
        })
        .collect();
    artifacts::write_json(&dir.join("subproblems.json"), &rows).unwrap();
}

/// Two independent executions write byte-identical artifacts.
fn criterion_9() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_suite(a.path());
    write_suite(b.path());
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut failures = 0;
    for name in &names {
        let same = std::fs::read(a.path().join(name)).ok() == std::fs::read(b.path().join(name)).ok();
        if !same {
            eprintln!("  criterion 9: {} differs", name.to_string_lossy());
            failures += 1;
        }
    }
    let count_b = std::fs::read_dir(b.path()).unwrap().count();
    if count_b != names.len() {
        eprintln!("  criterion 9: {} files vs {count_b}", names.len());
        failures += 1;
    }
    Verdict::new(failures, names.len(), "artifact files")
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() -> ExitCode {
    let runs = acceptance_runs();
    let criteria: [Criterion; 9] = [
        ("subproblem correctness", Box::new(criterion_1)),
        ("σ-certificate soundness", Box::new(criterion_2)),
        ("trajectory invariants", Box::new(|| criterion_3(&runs))),
        ("full convergence", Box::new(|| criterion_4(&runs))),
        ("quasi-Fejér inequality", Box::new(|| criterion_5(&runs))),
        ("paper_cubic criticality", Box::new(criterion_6)),
        ("scalar reduction", Box::new(criterion_7)),
        ("Armijo maximality", Box::new(criterion_8)),
        ("determinism", Box::new(criterion_9)),
    ];
    let mut all = true;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        all &= v.pass;
        println!(
            "{} criterion {}: {name} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
