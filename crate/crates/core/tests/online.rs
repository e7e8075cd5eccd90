use proptest::prelude::*;

use stackelberg_core::online::{
    contraction, geometric_sum_bound, robustness_bound, run_asym_tracking, run_sym_tracking, QuadraticSaddleSequence,
};
use stackelberg_core::Error;

fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

fn uncoupled(mu_x: f64, mu_y: f64, dim: usize, drift: f64, steps: usize, seed: u64) -> QuadraticSaddleSequence {
    QuadraticSaddleSequence::generate(mu_x, mu_y, vec![zeros(dim); dim], dim, dim, drift, steps, seed).unwrap()
}

#[test]
fn contraction_formula() {
    assert_eq!(contraction(1.0, 1.0, 1.0), 1.0);
    assert!((contraction(1.0, 4.0, 0.4) - 0.64).abs() <= 1e-15);
    assert!((contraction(0.5, 2.0, 0.4) - 0.32).abs() <= 1e-15);
}

#[test]
fn bound_rejects_contraction_outside_unit_interval() {
    assert!(matches!(robustness_bound(1.0, 1.0, 0.0, 0.1, 10, 1.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(robustness_bound(1.0, 1.0, 2.0, 0.1, 10, 1.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn unit_contraction_is_pure_drift() {
    assert_eq!(robustness_bound(1.0, 1.0, 1.0, 0.1, 5, 3.0).unwrap(), 0.2);
    assert_eq!(geometric_sum_bound(1.0, 1.0, 1.0, &[0.1, 0.3], 3.0).unwrap(), 0.3);
}

#[test]
fn tracking_rejects_large_steps() {
    let seq = uncoupled(1.0, 4.0, 2, 0.1, 10, 0);
    assert!(matches!(run_asym_tracking(&seq, 0.5, &zeros(2)), Err(Error::InvalidParameter(_))));
    assert!(matches!(run_sym_tracking(&seq, 0.4, 0.5, &zeros(2), &zeros(2)), Err(Error::InvalidParameter(_))));
    assert!(matches!(run_asym_tracking(&seq, -0.1, &zeros(2)), Err(Error::InvalidParameter(_))));
    assert!(matches!(run_asym_tracking(&seq, 0.1, &zeros(3)), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn static_game_from_equilibrium_stays_there() {
    let seq = uncoupled(1.0, 4.0, 3, 0.0, 50, 7);
    let nash = seq.nash_oracle(0).unwrap();
    let r = run_sym_tracking(&seq, 0.4, 0.25, &nash.x, &nash.y).unwrap();
    assert!(r.rows.iter().all(|row| row.dist_x == 0.0 && row.dist_y == 0.0));
    let r = run_asym_tracking(&seq, 0.4, &nash.x).unwrap();
    assert!(r.rows.iter().all(|row| row.dist_x == 0.0));
}

#[test]
fn static_game_contracts_geometrically() {
    let seq = uncoupled(1.0, 4.0, 3, 0.0, 40, 2);
    let r = run_asym_tracking(&seq, 0.4, &[3.0, -3.0, 3.0]).unwrap();
    let rho = (1.0 - r.delta).sqrt();
    for row in &r.rows {
        assert!(row.dist_x <= rho.powi(row.t as i32) * r.rows[0].dist_x * (1.0 + 1e-12));
    }
    assert_eq!(r.violations, 0);
}

#[test]
fn uncoupled_symmetric_run_splits_into_two_asymmetric_runs() {
    let seq = uncoupled(0.5, 2.0, 3, 0.3, 100, 11);
    let (ex, ey) = (0.5 * 2.0 / (0.5 + seq.lipschitz()), 2.0 / (2.0 + seq.lipschitz()));
    let start_x = [0.2, -0.4, 1.0];
    let start_y = [-1.0, 0.0, 0.5];
    let sym = run_sym_tracking(&seq, ex, ey, &start_x, &start_y).unwrap();
    let ax = run_asym_tracking(&seq, ex, &start_x).unwrap();
    let ay = run_asym_tracking(&seq.swapped(), ey, &start_y).unwrap();
    assert_eq!(sym.delta_x, ax.delta);
    assert_eq!(sym.delta_y, Some(ay.delta));
    for ((s, a), b) in sym.rows.iter().zip(&ax.rows).zip(&ay.rows) {
        assert!((s.dist_x - a.dist_x).abs() <= 1e-14);
        assert!((s.dist_y - b.dist_x).abs() <= 1e-14);
    }
}

#[test]
fn coupled_scalar_equilibrium() {
    // mu_x = 2, mu_y = 1, Q = 1, centres a and c: the saddle point solves
    // 2(x - a) + y = 0 and x - (y - c) = 0.
    let seq = QuadraticSaddleSequence::generate(2.0, 1.0, vec![vec![1.0]], 1, 1, 0.0, 1, 4).unwrap();
    let (a, c) = (seq.centers_x[0][0], seq.centers_y[0][0]);
    let nash = seq.nash_oracle(0).unwrap();
    let x = (2.0 * a - c) / 3.0;
    assert!((nash.x[0] - x).abs() <= 1e-12);
    assert!((nash.y[0] - (x + c)).abs() <= 1e-12);
    assert!((seq.best_response_y(0, &nash.x)[0] - nash.y[0]).abs() <= 1e-12);
    assert!(seq.value_grad(0, &nash.x)[0].abs() <= 1e-12);
}

#[test]
fn generation_is_deterministic() {
    let a = uncoupled(1.0, 1.0, 2, 0.5, 20, 9);
    let b = uncoupled(1.0, 1.0, 2, 0.5, 20, 9);
    assert_eq!(a.centers_x, b.centers_x);
    assert_eq!(a.centers_y, b.centers_y);
    assert_ne!(a.centers_x, uncoupled(1.0, 1.0, 2, 0.5, 20, 10).centers_x);
}

fn coupling() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-0.3f64..0.3, 2), 2)
}

proptest! {
    #[test]
    fn bound_is_monotone(mu in 0.1f64..2.0, extra in 0.0f64..4.0, scale in 0.05f64..1.0, d in 0.0f64..1.0, dd in 0.0f64..1.0, init in 0.0f64..5.0, di in 0.0f64..5.0, steps in 0usize..200) {
        let l = mu + extra;
        let eta = scale * 2.0 / (mu + l);
        let base = robustness_bound(mu, l, eta, d, steps, init).unwrap();
        prop_assert!(robustness_bound(mu, l, eta, d + dd, steps, init).unwrap() >= base);
        prop_assert!(robustness_bound(mu, l, eta, d, steps, init + di).unwrap() >= base);
        prop_assert!(robustness_bound(mu, l, eta, d, steps + 1, init).unwrap() <= base + 2.0 * d / contraction(mu, l, eta) + 1e-12);
    }

    #[test]
    fn geometric_form_is_tighter(mu in 0.1f64..2.0, extra in 0.0f64..4.0, scale in 0.05f64..1.0, drifts in prop::collection::vec(0.0f64..1.0, 0..100), init in 0.0f64..5.0) {
        let l = mu + extra;
        let eta = scale * 2.0 / (mu + l);
        let d = drifts.iter().copied().fold(0.0, f64::max);
        let g = geometric_sum_bound(mu, l, eta, &drifts, init).unwrap();
        let s = robustness_bound(mu, l, eta, d, drifts.len(), init).unwrap();
        prop_assert!(g <= s * (1.0 + 1e-12));
    }

    #[test]
    fn value_gradient_matches_finite_differences(q in coupling(), seed in 0u64..100, x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let seq = QuadraticSaddleSequence::generate(1.0, 1.0, q, 2, 2, 0.1, 3, seed).unwrap();
        let g = seq.value_grad(1, &x);
        for j in 0..2 {
            let h = 1e-6;
            let (mut up, mut down) = (x.clone(), x.clone());
            up[j] += h;
            down[j] -= h;
            let num = (seq.value(1, &up) - seq.value(1, &down)) / (2.0 * h);
            prop_assert!((g[j] - num).abs() <= 1e-6);
        }
    }

    #[test]
    fn tracking_respects_bounds(q in coupling(), seed in 0u64..10_000, drift in 0.0f64..1.0, scale in 0.1f64..1.0) {
        let seq = QuadraticSaddleSequence::generate(1.0, 2.0, q, 2, 2, drift, 100, seed).unwrap();
        let l = seq.lipschitz().max(seq.value_smoothness());
        let asym = run_asym_tracking(&seq, scale * 2.0 / (1.0 + l), &zeros(2)).unwrap();
        prop_assert_eq!(asym.violations, 0);
        let l = seq.lipschitz();
        let sym = run_sym_tracking(&seq, scale * 2.0 / (1.0 + l), scale * 2.0 / (2.0 + l), &zeros(2), &zeros(2)).unwrap();
        prop_assert_eq!(sym.violations, 0);
        for row in asym.rows.iter().chain(&sym.rows) {
            prop_assert!(row.bound_sum <= row.bound_simple * (1.0 + 1e-12));
        }
    }
}
