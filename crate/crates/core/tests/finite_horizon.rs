//! Finite-horizon solves and their convergence to the ergodic solution.

use robust_forward::drivers::{ConstantGenerator, Generator, Shifted};
use robust_forward::ergodic::{
    discounted_forward_diagnostics, ergodic_limit, lower_value, solve_ergodic_false_transient,
    solve_finite_horizon, solve_finite_horizon_with_terminal, PdeProblem, DEFAULT_RHO_SCHEDULE,
};
use robust_forward::fixtures::Fixture;
use robust_forward::market::{simulate_factor, MeasureShift, SimulationConfig};

#[test]
fn horizon_convergence_on_model1() {
    let fx = Fixture::model1();
    let erg = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let report = ergodic_limit(
        fx.problem(),
        &fx.grid,
        &erg,
        &[2.0, 4.0, 6.0, 8.0, 10.0],
        None,
    )
    .unwrap();
    for r in &report.rows {
        println!(
            "T = {:>4}: L = {:+.3e}, spread = {:.2e}, cauchy = {:?}",
            r.horizon, r.l_hat, r.spread, r.cauchy_diff
        );
    }
    let last = report.rows.last().unwrap();
    assert!(report.last_cauchy_diff().unwrap() <= 1e-3);
    assert!(last.spread <= 1e-3);
    // Consecutive differences shrink.
    let diffs: Vec<f64> = report.rows.iter().filter_map(|r| r.cauchy_diff).collect();
    assert!(diffs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{diffs:?}");

    // Independent solves at T = 8 and T = 10 with their own step sizes.
    let f10 = solve_finite_horizon(fx.problem(), &fx.grid, 10.0, 10.0 / 2000.0).unwrap();
    let f8 = solve_finite_horizon(fx.problem(), &fx.grid, 8.0, 8.0 / 2000.0).unwrap();
    let a = f10.value_at(&fx.v0, 0.0).0 - erg.lambda * 10.0;
    let b = f8.value_at(&fx.v0, 0.0).0 - erg.lambda * 8.0;
    assert!((a - b).abs() <= 1e-2);

    let w = lower_value(0.5, 1.0, &fx.v0, &f10).unwrap();
    let u0 = 2.0 * erg.y_at(&fx.v0).0.exp();
    let ratio = w * (-erg.lambda * 10.0 - report.l_estimate).exp() / u0;
    assert!((ratio - 1.0).abs() <= 1e-2, "{ratio}");

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
}

#[test]
fn trivial_limits() {
    let fx = Fixture::nonrobust();
    let erg = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let report = ergodic_limit(fx.problem(), &fx.grid, &erg, &[1.0, 2.0], None).unwrap();
    for r in &report.rows {
        assert!(r.l_hat.abs() < 1e-9 && r.spread < 1e-9);
    }
    let gen = ConstantGenerator { dim: 1, value: 0.4 };
    let p = PdeProblem::new(&fx.model, &gen).unwrap();
    let erg = solve_ergodic_false_transient(p, &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let report = ergodic_limit(p, &fx.grid, &erg, &[1.0, 3.0], None).unwrap();
    assert!(report.rows.iter().all(|r| r.l_hat.abs() < 1e-9));
}

#[test]
fn semigroup_property() {
    let fx = Fixture::model1();
    let dt = 0.005;
    let full = solve_finite_horizon(fx.problem(), &fx.grid, 4.0, dt).unwrap();
    let late = solve_finite_horizon(fx.problem(), &fx.grid, 1.5, dt).unwrap();
    let early = solve_finite_horizon_with_terminal(fx.problem(), &fx.grid, 2.5, dt, late.initial())
        .unwrap();
    let h = fx.grid.spacing(0);
    let gap = full
        .initial()
        .iter()
        .zip(early.initial())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 10.0 * h * h + 10.0 * dt, "{gap}");
}

#[test]
fn value_grows_with_horizon_for_nonnegative_generator() {
    let fx = Fixture::model1();
    let shifted = Shifted {
        inner: fx.spec.clone(),
        shift: 0.1,
    };
    let p = PdeProblem::new(&fx.model, &shifted).unwrap();
    let field = solve_finite_horizon(p, &fx.grid, 3.0, 0.005).unwrap();
    // G stays nonnegative along the computed gradients.
    for (k, v) in fx.grid.points().iter().enumerate() {
        assert!(shifted.value(v, field.z0.at_node(k)).unwrap() >= 0.0);
    }
    let mut prev = f64::NEG_INFINITY;
    for t in [3.0, 2.5, 2.0, 1.0, 0.0] {
        let (f, _) = field.value_at(&fx.v0, t);
        assert!(f >= prev);
        prev = f;
    }
}

#[test]
fn discounted_forward_diagnostics_trend() {
    let fx = Fixture::model1();
    let erg = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let cfg = SimulationConfig::new(2.0, 0.01, 400, 11);
    let paths = simulate_factor(&fx.model, &MeasureShift::Base, &cfg, &fx.v0).unwrap();
    let rep = discounted_forward_diagnostics(
        fx.problem(),
        &fx.spec,
        &fx.grid,
        &DEFAULT_RHO_SCHEDULE,
        &erg,
        &paths,
    )
    .unwrap();
    for r in &rep.rows {
        println!(
            "rho {:>5}: ratio err {:.3e}, gap {:.3e}",
            r.rho, r.ratio_max_error, r.strategy_gap
        );
    }
    let first = &rep.rows[0];
    let last = rep.rows.last().unwrap();
    assert!(last.strategy_gap < first.strategy_gap);
    assert!(last.ratio_max_error < first.ratio_max_error);

    let big = Fixture::large_uncertainty();
    let erg =
        solve_ergodic_false_transient(big.problem(), &big.grid, 0.01, 1e-10, &big.v0).unwrap();
    let paths = simulate_factor(&big.model, &MeasureShift::Base, &cfg, &big.v0).unwrap();
    let rep = discounted_forward_diagnostics(
        big.problem(),
        &big.spec,
        &big.grid,
        &[0.2, 0.01],
        &erg,
        &paths,
    )
    .unwrap();
    for r in &rep.rows {
        assert!(r.ratio_max_error == 0.0 && r.strategy_gap == 0.0);
    }
}
