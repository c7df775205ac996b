use std::sync::Arc;

use super::*;
use crate::drivers::{DriverSpec, Generator, Shifted, UtilityClass, Variant, ZPenalized};
use crate::ergodic::solve_ergodic_false_transient;
use crate::fixtures::Fixture;
use crate::market::ConstantFeedback;
use crate::rng::PathNoise;
use crate::sets::ConvexSet;

#[test]
fn three_se_rule() {
    let r = MonteCarloReport::new("x", 1.02, 0.01, BoundKind::Equals, 1.0, 0.0, 10, 1);
    assert!(r.passed);
    let r = MonteCarloReport::new("x", 1.04, 0.01, BoundKind::Equals, 1.0, 0.0, 10, 1);
    assert!(!r.passed);
    let r = MonteCarloReport::new("x", 1.04, 0.01, BoundKind::AtMost, 1.0, 0.0, 10, 1);
    assert!(!r.passed);
    let r = MonteCarloReport::new("x", 1.04, 0.01, BoundKind::AtLeast, 1.0, 0.0, 10, 1);
    assert!(r.passed);
    let r = MonteCarloReport::new("x", 1.04, 0.01, BoundKind::Equals, 1.0, 0.05, 10, 1);
    assert!(r.passed);
    let r = MonteCarloReport::new("x", 1.0 + 1e-13, 0.0, BoundKind::Equals, 1.0, 0.0, 10, 1);
    assert!(r.passed && r.degenerate);
    let json = serde_json::to_value(&r).unwrap();
    for key in [
        "check",
        "estimate",
        "std_error",
        "bound_kind",
        "bound_value",
        "passed",
        "paths",
        "seed",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["bound_kind"], "equals");
}

#[test]
fn brute_force_examples() {
    let frozen = DriverSpec::constant_theta(
        UtilityClass::power(0.5).unwrap(),
        ConvexSet::singleton(vec![0.0]),
        ConvexSet::interval(-1.0, 1.0).unwrap(),
        &[0.3],
        Variant::Generic,
    )
    .unwrap();
    let g = brute_force_g(&frozen, &[0.0], &[0.2], 1e-3).unwrap();
    assert!((g - (-0.18)).abs() < 1e-12);

    let s7 = DriverSpec::constant_theta(
        UtilityClass::Log,
        ConvexSet::interval(0.0, 1.0).unwrap(),
        ConvexSet::interval(0.0, 1.0).unwrap(),
        &[-0.5],
        Variant::Section7,
    )
    .unwrap();
    let s = saddle_gap(&s7, &[0.0], &[0.3], 1e-3).unwrap();
    assert!((s.maxmin - (-0.12)).abs() < 1e-9, "{}", s.maxmin);
    assert!(s.gap > 1e-2, "no saddle point expected, gap {}", s.gap);
    let m = maxmin_point(&s7, &[0.0], &[0.3], 1e-3).unwrap();
    assert!((m.pi[0] - 0.2).abs() < 1e-9 && m.reply[0] == 1.0, "{m:?}");
    assert!(max_second_difference(&s7, &[0.0], &[0.3], 1e-2).unwrap() <= 1e-12);
    let m = maxmin_point(&frozen, &[0.0], &[0.2], 1e-3).unwrap();
    assert!((m.value + 0.18).abs() < 1e-12 && (m.reply[0] + 1.0).abs() < 1e-12);

    // No uncertainty: sup over π of the quadratic.
    let plain = DriverSpec::constant_theta(
        UtilityClass::power(0.5).unwrap(),
        ConvexSet::unconstrained(1),
        ConvexSet::singleton(vec![0.0]),
        &[0.4],
        Variant::Model1,
    )
    .unwrap();
    let (theta, z, d): (f64, f64, f64) = (0.4, 0.1, 0.5);
    let exact = d * (theta + z).powi(2) / (2.0 * (1.0 - d)) + 0.5 * z * z;
    let g = brute_force_g(&plain, &[0.0], &[z], 1e-3).unwrap();
    assert!((g - exact).abs() < 1e-6);
    assert!((plain.driver(&[0.0], &[z]).unwrap() - exact).abs() < 1e-12);
}

#[test]
fn model1_driver_matches_oracle() {
    let fx = Fixture::model1();
    let mut noise = PathNoise::new(5, 0);
    for _ in 0..10 {
        let v = [noise.uniform(-3.0, 3.0)];
        let z = [noise.uniform(-1.0, 1.0)];
        let g = fx.spec.driver(&v, &z).unwrap();
        let b = brute_force_g(&fx.spec, &v, &z, 1e-3).unwrap();
        assert!((g - b).abs() < 2e-3, "{v:?} {z:?}: {g} vs {b}");
        let s = saddle_gap(&fx.spec, &v, &z, 1e-3).unwrap();
        assert!(s.gap >= -2e-3 && s.gap <= 2e-3);
    }
}

#[test]
fn constant_strategies_have_deterministic_rate() {
    let fx = Fixture::nonrobust();
    let payoff = RunningPayoff::new(0.5).unwrap();
    let setup = RiskSensitiveSetup {
        model: &fx.model,
        payoff,
        v0: &fx.v0,
    };
    let cfg = McConfig::new(2.0, 0.02, 200, 3);
    let exact = payoff.value(&[0.4], &[0.7], &[0.0]);
    let rep = risk_sensitive_rate(
        setup,
        "constant",
        Arc::new(ConstantFeedback(vec![0.7])),
        Arc::new(ConstantFeedback(vec![0.0])),
        &cfg,
        &[1.0],
        (BoundKind::Equals, exact),
        0.0,
    )
    .unwrap();
    assert!(rep.report.passed && rep.report.degenerate, "{rep:?}");
    assert_eq!(rep.trajectory.len(), 2);
    assert!((rep.trajectory[0].rate - exact).abs() < 1e-12);
    assert_eq!(payoff.value(&[0.4], &[0.0], &[0.3]), 0.0);
}

#[test]
fn zero_portfolio_rate_vanishes_and_martingale_holds() {
    let fx = Fixture::model1();
    let field = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let strategies = Strategies::new(&fx.spec, &field);
    let u_star = strategies.u_star().unwrap();
    let payoff = RunningPayoff::new(0.5).unwrap();
    let setup = RiskSensitiveSetup {
        model: &fx.model,
        payoff,
        v0: &fx.v0,
    };
    let cfg = McConfig::new(2.0, 0.02, 500, 9);
    let rep = risk_sensitive_rate(
        setup,
        "zero portfolio",
        Arc::new(ConstantFeedback(vec![0.0])),
        Arc::new(u_star.clone()),
        &cfg,
        &[],
        (BoundKind::Equals, 0.0),
        0.0,
    )
    .unwrap();
    assert!(rep.report.passed && rep.report.estimate == 0.0);

    let pi_star = strategies.pi_star().unwrap();
    let m = MartingaleSetup {
        model: &fx.model,
        utility: fx.spec.utility(),
        field: &field,
        x0: 1.0,
    };
    let cfg = McConfig::new(1.0, 0.01, 4000, 17);
    let r = martingale_check(
        m,
        "saddle",
        &pi_star,
        Arc::new(u_star),
        BoundKind::Equals,
        &cfg,
    )
    .unwrap();
    assert!(r.passed && (r.estimate - 1.0).abs() < 1e-2, "{}", r.line());
}

#[test]
fn comparison_of_shifted_and_penalized_generators() {
    let fx = Fixture::model1();
    let probes = default_z_probes(1, 2.0, 41);
    let up = Shifted {
        inner: fx.spec.clone(),
        shift: 0.3,
    };
    let r = comparison_check(
        &fx.model, &up, &fx.spec, &fx.grid, &fx.v0, &probes, 0.01, 1e-10,
    )
    .unwrap();
    assert!(r.passed && (r.lambda1 - r.lambda2 - 0.3).abs() < 1e-4);
    let low = ZPenalized {
        inner: fx.spec.clone(),
        weight: 0.1,
    };
    let r = comparison_check(
        &fx.model, &fx.spec, &low, &fx.grid, &fx.v0, &probes, 0.01, 1e-10,
    )
    .unwrap();
    assert!(r.passed);
    let err = comparison_check(
        &fx.model, &low, &fx.spec, &fx.grid, &fx.v0, &probes, 0.01, 1e-10,
    );
    assert!(matches!(err, Err(crate::Error::Dominance { .. })));
    assert_eq!(Generator::dim(&low), 1);
}
