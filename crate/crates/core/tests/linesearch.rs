use pareto_descent::direction::{solve_sigma_approx, SubproblemConfig};
use pareto_descent::linesearch::{armijo_holds, armijo_step, dyadic, LineSearchError, DEFAULT_MAX_J};
use pareto_descent::problems::PROBLEM_NAMES;
use pareto_descent::{get_problem, MultiObjective};
use proptest::prelude::*;

fn half_square() -> MultiObjective {
    MultiObjective::new(1, 1, |x| vec![0.5 * x[0] * x[0]], |x| vec![vec![x[0]]])
}

fn step_1d(p: &MultiObjective, x: f64, v: f64, beta: f64) -> Result<(f64, u32), LineSearchError> {
    let fx = p.evaluate(&[x]).unwrap();
    let jv = p.jacobian(&[x]).unwrap().mul_vec(&[v]);
    armijo_step(p, &[x], &fx, &[v], &jv, beta, DEFAULT_MAX_J).map(|s| (s.t, s.j))
}

#[test]
fn scalar_examples() {
    assert_eq!(step_1d(&half_square(), 1.0, -1.0, 0.5).unwrap(), (1.0, 0));
    let linear = MultiObjective::new(1, 1, |x| vec![x[0]], |_| vec![vec![1.0]]);
    assert_eq!(step_1d(&linear, 0.0, -1.0, 0.5).unwrap(), (1.0, 0));
    assert_eq!(step_1d(&half_square(), 1.0, -3.0, 0.9).unwrap(), (0.0625, 4));
}

#[test]
fn dyadic_steps_are_powers_of_two() {
    for j in 0..=DEFAULT_MAX_J {
        assert_eq!(dyadic(j), 0.5f64.powi(j as i32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn certified_directions_give_maximal_decreasing_steps(
        which in 0..PROBLEM_NAMES.len(),
        coords in prop::collection::vec(-10.0f64..10.0, 2),
        sigma in prop::sample::select(vec![0.0, 0.1, 0.5, 0.9]),
        beta in prop::sample::select(vec![0.1, 0.5, 0.9]),
    ) {
        let d = get_problem(PROBLEM_NAMES[which]).unwrap();
        let x = &coords[..d.problem.n()];
        let jac = d.problem.jacobian(x).unwrap();
        let dir = solve_sigma_approx(&jac, sigma, &SubproblemConfig::default()).unwrap();
        prop_assume!(!dir.critical && dir.sigma_certified);
        let fx = d.problem.evaluate(x).unwrap();
        let jv = jac.mul_vec(&dir.v);
        let step = armijo_step(&d.problem, x, &fx, &dir.v, &jv, beta, DEFAULT_MAX_J).unwrap();
        prop_assert!(step.j <= DEFAULT_MAX_J);
        prop_assert_eq!(step.t, dyadic(step.j));
        let trial = |t: f64| -> Vec<f64> {
            let y: Vec<f64> = x.iter().zip(&dir.v).map(|(a, b)| a + t * b).collect();
            d.problem.evaluate(&y).unwrap()
        };
        let ft = trial(step.t);
        prop_assert!(armijo_holds(&ft, &fx, &jv, beta, step.t));
        if step.j >= 1 {
            prop_assert!(!armijo_holds(&trial(2.0 * step.t), &fx, &jv, beta, 2.0 * step.t));
        }
        prop_assert!(ft.iter().zip(&fx).all(|(a, b)| a <= b));
        let active = dir.active_criteria(&jac, 0.0)[0];
        prop_assert!(ft[active] < fx[active]);
    }
}
