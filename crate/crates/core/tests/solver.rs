use pareto_descent::diagnostics::{check_level_set, check_monotone, check_summability, step_residuals};
use pareto_descent::linesearch::{armijo_holds, dyadic};
use pareto_descent::oracle::{check_weak_pareto_local, trial_rng, SamplingBox};
use pareto_descent::problems::PROBLEM_NAMES;
use pareto_descent::solver::is_critical;
use pareto_descent::{
    get_problem, run, ConvexityClass, Jacobian, MultiObjective, Point, RunReport, SolverConfig, Termination,
};

const SEED: u64 = 1_729;

fn starts(n: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| SamplingBox::default().sample(&mut trial_rng(SEED, i as u64), n))
        .collect()
}

fn solve(p: &MultiObjective, x0: &[f64], cfg: &SolverConfig) -> RunReport {
    run(p, &Point::new(x0.to_vec()).unwrap(), cfg).unwrap()
}

fn sigma(s: f64) -> SolverConfig {
    SolverConfig {
        sigma: s,
        ..SolverConfig::default()
    }
}

/// Every builtin from its recommended start and a few seeded ones.
fn all_runs(cfg: &SolverConfig) -> Vec<(&'static str, RunReport)> {
    let mut out = Vec::new();
    for name in PROBLEM_NAMES {
        let d = get_problem(name).unwrap();
        let mut xs = starts(d.problem.n(), 5);
        xs.push(d.recommended_x0.clone());
        for x0 in xs {
            out.push((name, solve(&d.problem, &x0, cfg)));
        }
    }
    out
}

#[test]
fn quad_pair_example() {
    let d = get_problem("quad_pair").unwrap();
    let r = solve(&d.problem, &[2.0, 2.0], &SolverConfig::default());
    assert_eq!(r.termination, Termination::CriticalPoint);
    let x = &r.final_x;
    assert!(x[1].abs() <= 1e-4 && (-1e-4..=1.0 + 1e-4).contains(&x[0]), "{x:?}");
    assert!(r.final_alpha.abs() <= 1e-8);
    // a simplex combination of the rows vanishes: w1·x + w2·(x − b) = 0
    let last = r.records.last().unwrap();
    let jac = d.problem.jacobian(x).unwrap();
    let residual: f64 = jac.tr_mul_vec(&last.weights).iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!(residual <= 1e-4, "{residual:e}");
}

#[test]
fn paper_cubic_example() {
    let d = get_problem("paper_cubic").unwrap();
    let r = solve(&d.problem, &[5.0], &SolverConfig::default());
    assert_eq!(r.termination, Termination::CriticalPoint);
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].k, 0);
    assert_eq!(r.final_x, vec![5.0]);
}

#[test]
fn scalar_half_square_example() {
    let p = MultiObjective::new(1, 1, |x| vec![0.5 * x[0] * x[0]], |x| vec![vec![x[0]]]);
    let r = solve(&p, &[1.0], &SolverConfig::default());
    assert_eq!(r.termination, Termination::CriticalPoint);
    assert_eq!(r.records.len(), 2);
    assert_eq!(r.records[0].v, vec![-1.0]);
    assert_eq!(r.records[0].t, 1.0);
    assert_eq!(r.records[1].x, vec![0.0]);
    assert_eq!(r.records[1].k, 1);
}

#[test]
fn is_critical_examples() {
    let cfg = SolverConfig::default();
    let zero = Jacobian::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    assert_eq!(is_critical(&zero, &cfg).unwrap(), (true, 0.0));
    let cubic = Jacobian::from_rows(&[vec![1.0], vec![-4.0]]).unwrap();
    let (critical, alpha) = is_critical(&cubic, &cfg).unwrap();
    assert!(critical && alpha.abs() <= 1e-12);
    let id = Jacobian::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let (critical, alpha) = is_critical(&id, &cfg).unwrap();
    assert!(!critical && (alpha + 0.25).abs() <= 1e-12);
}

#[test]
fn records_follow_the_update_rule() {
    for s in [0.0, 0.5] {
        for (name, r) in all_runs(&sigma(s)) {
            for pair in r.records.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                assert_eq!(b.k, a.k + 1);
                assert_eq!(a.t, dyadic(a.j), "{name}: t must be 2^-j");
                for ((xa, va), xb) in a.x.iter().zip(&a.v).zip(&b.x) {
                    assert_eq!(xa + a.t * va, *xb, "{name}: x^(k+1) = x^k + t v^k");
                }
            }
            let last = r.records.last().unwrap();
            assert_eq!((last.t, last.j), (0.0, 0), "{name}: terminal record");
            assert_eq!(last.x, r.final_x);
        }
    }
}

#[test]
fn steps_are_certified_armijo_steps() {
    for s in [0.0, 0.1, 0.5, 0.9] {
        let cfg = sigma(s);
        for (name, r) in all_runs(&cfg) {
            let d = get_problem(name).unwrap();
            for rec in &r.records[..r.records.len() - 1] {
                assert!(rec.sigma_certified, "{name}: uncertified step at k={}", rec.k);
                let jv = d.problem.jacobian(&rec.x).unwrap().mul_vec(&rec.v);
                assert!(jv.iter().all(|c| *c < 0.0), "{name}: not a descent direction");
                let trial = |t: f64| -> Vec<f64> {
                    let x: Vec<f64> = rec.x.iter().zip(&rec.v).map(|(a, b)| a + t * b).collect();
                    d.problem.evaluate(&x).unwrap()
                };
                assert!(armijo_holds(&trial(rec.t), &rec.fx, &jv, cfg.beta, rec.t));
                if rec.j >= 1 {
                    assert!(!armijo_holds(&trial(2.0 * rec.t), &rec.fx, &jv, cfg.beta, 2.0 * rec.t));
                }
            }
        }
    }
}

#[test]
fn objective_values_decrease() {
    for s in [0.0, 0.5, 0.9] {
        for (name, r) in all_runs(&sigma(s)) {
            assert!(check_monotone(&r).ok(), "{name} sigma {s}");
            assert!(check_level_set(&r).ok(), "{name} sigma {s}");
            for pair in r.records.windows(2) {
                let (a, b) = (&pair[0].fx, &pair[1].fx);
                assert!(b.iter().zip(a).all(|(y, x)| y <= x));
                assert!(b.iter().zip(a).any(|(y, x)| y < x), "{name}: no strict decrease");
            }
        }
    }
}

#[test]
fn step_residuals_are_summable() {
    for (name, r) in all_runs(&SolverConfig::default()) {
        if r.termination != Termination::CriticalPoint {
            continue;
        }
        let mut partial = 0.0;
        for rec in &r.records {
            let next = partial + (rec.t * rec.norm_v()).powi(2);
            assert!(next >= partial && next.is_finite(), "{name}");
            partial = next;
        }
    }
}

/// The tail test on the acceptance problem set: quad_pair from seeded
/// starts, scalar_quad and quasi_exp from their recommended starts.
#[test]
fn step_residual_tail_vanishes() {
    let quad = get_problem("quad_pair").unwrap();
    let mut runs: Vec<RunReport> = starts(2, 20)
        .iter()
        .map(|x0| solve(&quad.problem, x0, &SolverConfig::default()))
        .collect();
    for name in ["scalar_quad", "quasi_exp"] {
        let d = get_problem(name).unwrap();
        runs.push(solve(&d.problem, &d.recommended_x0, &SolverConfig::default()));
    }
    for r in &runs {
        let outcome = check_summability(r);
        assert!(outcome.ok(), "{outcome:?} {:?}", step_residuals(r));
    }
}

#[test]
fn long_runs_have_small_final_residuals() {
    let d = get_problem("quasi_exp").unwrap();
    let r = solve(&d.problem, &d.recommended_x0, &SolverConfig::default());
    let residuals = step_residuals(&r);
    let first = residuals[0];
    for tail in &residuals[residuals.len().saturating_sub(10)..] {
        assert!(*tail <= first, "{tail:e} vs first {first:e}");
    }
    assert!(*residuals.last().unwrap() <= 1e-6 * first);
}

#[test]
fn quasiconvex_problems_converge() {
    for name in PROBLEM_NAMES {
        let d = get_problem(name).unwrap();
        if !d.convexity_class.is_quasiconvex() {
            continue;
        }
        for s in [0.0, 0.5] {
            let cfg = sigma(s);
            for x0 in starts(d.problem.n(), 10) {
                let r = solve(&d.problem, &x0, &cfg);
                assert_eq!(r.termination, Termination::CriticalPoint, "{name} from {x0:?}");
                assert!(r.final_alpha.abs() <= cfg.eps_critical);
                let set = d.known_critical_set.as_ref().unwrap();
                // |α| ≤ eps bounds the distance only up to the flattest curvature
                assert!(set.distance(&r.final_x) <= 1e-2, "{name}: final {:?}", r.final_x);
            }
        }
    }
}

#[test]
fn pseudoconvex_finals_are_weak_pareto() {
    for name in PROBLEM_NAMES {
        let d = get_problem(name).unwrap();
        if !d.convexity_class.is_pseudoconvex() {
            continue;
        }
        for x0 in starts(d.problem.n(), 5) {
            let r = solve(&d.problem, &x0, &SolverConfig::default());
            assert!(
                check_weak_pareto_local(&d.problem, &r.final_x, 0.5, 2000, SEED).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn nonconvex_demo_reaches_a_critical_point() {
    let d = get_problem("nonconvex_demo").unwrap();
    for x0 in starts(2, 10) {
        let r = solve(&d.problem, &x0, &SolverConfig::default());
        assert_eq!(r.termination, Termination::CriticalPoint, "from {x0:?}");
        assert!(d.known_critical_set.as_ref().unwrap().distance(&r.final_x) <= 1e-3);
    }
}

/// Both runs converge; inner-iteration totals are reported. The σ = 0.5 run
/// takes more outer steps, so its total is not bounded by the exact run's;
/// the per-subproblem saving is asserted in the direction tests.
#[test]
fn sigma_runs_both_converge() {
    let d = get_problem("quad_pair").unwrap();
    assert_eq!(d.convexity_class, ConvexityClass::Convex);
    for x0 in starts(2, 20) {
        let exact = solve(&d.problem, &x0, &sigma(0.0));
        let inexact = solve(&d.problem, &x0, &sigma(0.5));
        assert_eq!(exact.termination, Termination::CriticalPoint);
        assert_eq!(inexact.termination, Termination::CriticalPoint);
        println!(
            "x0 = {x0:?}: sigma 0 {} steps {} inner, sigma 0.5 {} steps {} inner",
            exact.iterations(),
            exact.total_inner_iterations(),
            inexact.iterations(),
            inexact.total_inner_iterations()
        );
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    for s in [0.0, 0.5] {
        let a = all_runs(&sigma(s));
        let b = all_runs(&sigma(s));
        for ((_, ra), (_, rb)) in a.iter().zip(&b) {
            assert_eq!(format!("{ra:?}"), format!("{rb:?}"));
        }
    }
}

#[test]
fn iteration_cap_is_reported() {
    let d = get_problem("quasi_exp").unwrap();
    let cfg = SolverConfig {
        max_iter: 3,
        ..SolverConfig::default()
    };
    let r = solve(&d.problem, &[-3.0, 4.0], &cfg);
    assert_eq!(r.termination, Termination::MaxIter);
    assert_eq!(r.iterations(), 3);
}

#[test]
fn inconsistent_jacobian_is_reported_not_raised() {
    // the Jacobian points the wrong way, so no step can satisfy the Armijo test
    let p = MultiObjective::new(1, 1, |x| vec![x[0] * x[0]], |x| vec![vec![-2.0 * x[0]]]);
    let r = solve(&p, &[1.0], &SolverConfig::default());
    assert_eq!(r.termination, Termination::LinesearchFailure);
}

#[test]
fn invalid_configs_are_rejected() {
    let d = get_problem("quad_pair").unwrap();
    let x0 = Point::new(vec![1.0, 1.0]).unwrap();
    for cfg in [
        SolverConfig {
            beta: 1.5,
            ..SolverConfig::default()
        },
        SolverConfig {
            beta: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            sigma: 1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            sigma: -0.1,
            ..SolverConfig::default()
        },
        SolverConfig {
            eps_critical: 0.0,
            ..SolverConfig::default()
        },
    ] {
        assert!(run(&d.problem, &x0, &cfg).is_err(), "{cfg:?}");
    }
}
