use proptest::prelude::*;

use stackelberg_core::game::{
    self, best_response, feasibility_check, grid_minimize, kkt_multipliers, lagrangian_eval, objective_eval,
    saddle_residual, stackelberg_residual, value_function, Profile, StackelbergGame,
};
use stackelberg_core::games::ExampleGame;
use stackelberg_core::{Error, FeasibleSet};

fn p(x: f64, y: f64) -> Profile {
    Profile::new(vec![x], vec![y])
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

#[test]
fn objective_examples() {
    let g = ExampleGame::degenerate();
    assert_eq!(objective_eval(&g, &p(0.5, 0.5)).unwrap(), 1.75);
    assert_eq!(objective_eval(&g, &p(0.0, 0.0)).unwrap(), 1.0);
    assert_eq!(objective_eval(&g, &p(-1.0, 1.0)).unwrap(), 3.0);
    let bad = Profile::new(vec![0.0, 0.0], vec![0.0]);
    assert!(matches!(objective_eval(&g, &bad), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn lagrangian_examples() {
    let g = ExampleGame::degenerate();
    let e = lagrangian_eval(&g, &p(0.5, 0.5), &[1.0]).unwrap();
    assert_eq!(e.value, 1.75);
    let e = lagrangian_eval(&g, &p(0.0, 0.0), &[1.0]).unwrap();
    assert_eq!(e.value, 2.0);
    assert_eq!(e.grad_x, vec![-1.0]);
    for (x, y) in [(0.3, -0.7), (-1.0, 1.0), (0.9, 0.2)] {
        assert_eq!(lagrangian_eval(&g, &p(x, y), &[1.0]).unwrap().grad_y, vec![0.0]);
    }
    assert!(matches!(
        lagrangian_eval(&g, &p(0.0, 0.0), &[-0.5]),
        Err(Error::NegativeMultiplier { index: 0, .. })
    ));
}

#[test]
fn value_and_best_response_examples() {
    let g = ExampleGame::degenerate();
    assert_eq!(value_function(&g, &[0.5]).unwrap(), 1.75);
    assert_eq!(value_function(&g, &[0.0]).unwrap(), 2.0);
    assert_eq!(value_function(&g, &[-1.0]).unwrap(), 3.0);
    assert_eq!(best_response(&g, &[0.5]).unwrap(), vec![0.5]);
    assert_eq!(best_response(&g, &[-0.5]).unwrap(), vec![1.0]);
    assert_eq!(best_response(&g, &[1.0]).unwrap(), vec![0.0]);
}

#[test]
fn kkt_examples() {
    let g = ExampleGame::degenerate();
    assert_eq!(kkt_multipliers(&g, &[0.5], &[0.5]).unwrap(), vec![1.0]);
    assert_eq!(kkt_multipliers(&g, &[-0.5], &[1.0]).unwrap(), vec![0.0]);
    assert_eq!(kkt_multipliers(&g, &[0.0], &[1.0]).unwrap(), vec![0.0]);
}

#[test]
fn stackelberg_residual_examples() {
    let g = ExampleGame::degenerate();
    let v = Some(1.75);
    let r = stackelberg_residual(&g, &p(0.5, 0.5), v).unwrap();
    assert_eq!((r.outer_eps, r.inner_delta), (Some(0.0), 0.0));
    let r = stackelberg_residual(&g, &p(0.0, 1.0), v).unwrap();
    assert_eq!((r.outer_eps, r.inner_delta), (Some(0.25), 0.0));
    let r = stackelberg_residual(&g, &p(0.5, 0.0), v).unwrap();
    assert_eq!((r.outer_eps, r.inner_delta), (Some(0.0), 0.5));
    assert_eq!(stackelberg_residual(&g, &p(0.5, 0.5), None).unwrap().outer_eps, None);
    assert!(matches!(
        stackelberg_residual(&g, &p(0.6, 0.6), v),
        Err(Error::InfeasibleProfile { .. })
    ));
}

#[test]
fn residual_vanishes_at_bundled_equilibria() {
    for g in [ExampleGame::degenerate(), ExampleGame::strictly_concave()] {
        let (x, y) = g.equilibrium();
        let r = stackelberg_residual(&g, &p(x, y), Some(g.optimal_value())).unwrap();
        assert!(r.outer_eps.unwrap() <= 1e-6 && r.inner_delta <= 1e-6);
    }
}

#[test]
fn saddle_residual_examples() {
    let g = ExampleGame::degenerate();
    let res = |x: f64| {
        saddle_residual(
            &g,
            &p(x, 0.3),
            &[1.0],
            |x| Ok(g.lagrangian_inner_max(x[0])),
            |y| Ok(g.lagrangian_outer_min(y[0])),
        )
        .unwrap()
    };
    assert_eq!(res(0.5), 0.0);
    assert!(close(res(0.0), 0.25));
    assert!(close(res(1.0), 0.25));
}

#[test]
fn feasibility_examples() {
    let g = ExampleGame::degenerate();
    let r = feasibility_check(&g, &p(0.5, 0.5), 1e-9).unwrap();
    assert!(r.feasible && r.violation == 0.0);
    let r = feasibility_check(&g, &p(0.6, 0.6), 0.1).unwrap();
    assert!(!r.feasible && close(r.violation, 0.2));
    let r = feasibility_check(&g, &p(0.0, 0.0), 1e-9).unwrap();
    assert!(r.feasible && r.slack == 1.0);
}

#[test]
fn grid_oracle_finds_the_strictly_concave_saddle() {
    let g = ExampleGame::strictly_concave();
    let (ybest, neg) = grid_minimize(g.inner_set(), 1e-3, |y| -g.objective(&[0.0], y)).unwrap();
    assert!((ybest[0] - 0.5).abs() <= 1e-3);
    assert!((-neg - g.lagrangian_inner_max(0.0)).abs() <= 1e-6);
    let (xbest, _) = grid_minimize(g.outer_set(), 1e-3, |x| g.objective(x, &[0.5])).unwrap();
    assert!(xbest[0].abs() <= 1e-3);
}

#[test]
fn missing_oracles_are_reported() {
    struct Bare(FeasibleSet);
    impl StackelbergGame for Bare {
        fn outer_set(&self) -> &FeasibleSet {
            &self.0
        }
        fn inner_set(&self) -> &FeasibleSet {
            &self.0
        }
        fn num_constraints(&self) -> usize {
            0
        }
        fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
            x[0] * y[0]
        }
        fn grad_x_objective(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
            y.to_vec()
        }
        fn grad_y_objective(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
        fn constraints(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
            Vec::new()
        }
        fn grad_x_constraints(&self, _x: &[f64], _y: &[f64]) -> Vec<Vec<f64>> {
            Vec::new()
        }
        fn grad_y_constraints(&self, _x: &[f64], _y: &[f64]) -> Vec<Vec<f64>> {
            Vec::new()
        }
    }
    let g = Bare(FeasibleSet::cube(1, -1.0, 1.0).unwrap());
    assert!(matches!(value_function(&g, &[0.0]), Err(Error::MissingOracle(_))));
    assert!(matches!(kkt_multipliers(&g, &[0.0], &[0.0]), Err(Error::MissingOracle(_))));
}

fn game(which: bool) -> ExampleGame {
    if which {
        ExampleGame::degenerate()
    } else {
        ExampleGame::strictly_concave()
    }
}

proptest! {
    // G0's value function has a concave kink at 0, so convexity is only
    // checked on the strictly concave game and on either side of the kink.
    #[test]
    fn value_function_convex(a in -1.0f64..1.0, b in -1.0f64..1.0, t in 0.0f64..1.0) {
        let g = ExampleGame::strictly_concave();
        let mid = value_function(&g, &[t * a + (1.0 - t) * b]).unwrap();
        let chord = t * value_function(&g, &[a]).unwrap() + (1.0 - t) * value_function(&g, &[b]).unwrap();
        prop_assert!(mid <= chord + 1e-12);
        let g0 = ExampleGame::degenerate();
        let (a, b) = (a.abs(), b.abs());
        let mid = value_function(&g0, &[t * a + (1.0 - t) * b]).unwrap();
        let chord = t * value_function(&g0, &[a]).unwrap() + (1.0 - t) * value_function(&g0, &[b]).unwrap();
        prop_assert!(mid <= chord + 1e-12);
    }

    #[test]
    fn envelope_matches_finite_differences(x in 0.05f64..0.95, neg in any::<bool>(), which in any::<bool>()) {
        let g = game(which);
        let x = if neg { -x } else { x };
        let y = best_response(&g, &[x]).unwrap();
        let lambda = kkt_multipliers(&g, &[x], &y).unwrap();
        let analytic = lagrangian_eval(&g, &Profile::new(vec![x], y), &lambda).unwrap().grad_x[0];
        let h = 1e-6;
        let numeric = (value_function(&g, &[x + h]).unwrap() - value_function(&g, &[x - h]).unwrap()) / (2.0 * h);
        prop_assert!((analytic - numeric).abs() <= 1e-4);
    }

    #[test]
    fn complementary_slackness(x in -1.0f64..1.0, which in any::<bool>()) {
        let g = game(which);
        let y = best_response(&g, &[x]).unwrap();
        let lambda = kkt_multipliers(&g, &[x], &y).unwrap();
        let slack = g.constraints(&[x], &y);
        prop_assert!(lambda[0] >= 0.0);
        prop_assert!((lambda[0] * slack[0]).abs() <= 1e-8);
        prop_assert!(slack[0] >= -game::FEASIBILITY_TOL);
    }

    #[test]
    fn saddle_residual_nonnegative(x in -1.0f64..1.0, y in -1.0f64..1.0, which in any::<bool>()) {
        let g = game(which);
        let lambda = [if which { 1.0 } else { 0.0 }];
        let r = saddle_residual(
            &g,
            &p(x, y),
            &lambda,
            |x| Ok(g.lagrangian_inner_max(x[0])),
            |y| Ok(g.lagrangian_outer_min(y[0])),
        ).unwrap();
        prop_assert!(r >= 0.0);
    }
}
