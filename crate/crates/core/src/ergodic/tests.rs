use super::*;
use crate::drivers::{ConstantGenerator, Shifted, UtilityClass};
use crate::fixtures::Fixture;
use crate::linalg::Matrix;

fn constant_problem(fx: &Fixture, c: f64) -> (ConstantGenerator, Fixture) {
    (
        ConstantGenerator {
            dim: fx.model.dim_factor(),
            value: c,
        },
        fx.clone(),
    )
}

#[test]
fn constant_generator_gives_constant_solutions() {
    let (gen, fx) = constant_problem(&Fixture::model1(), 0.3);
    let problem = PdeProblem::new(&fx.model, &gen).unwrap();
    let disc = solve_discounted(problem, &fx.grid, 0.1).unwrap();
    assert!(disc.y.iter().all(|y| (y - 3.0).abs() < 1e-10));

    let vd =
        solve_ergodic_vanishing_discount(problem, &fx.grid, &DEFAULT_RHO_SCHEDULE, &fx.v0).unwrap();
    let ft = solve_ergodic_false_transient(problem, &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    for field in [&vd, &ft] {
        assert!((field.lambda - 0.3).abs() < 1e-9, "{}", field.lambda);
        assert!(field.y.iter().all(|y| y.abs() < 1e-9));
        assert!(field.z_bound() < 1e-8);
    }
}

#[test]
fn nonrobust_rate_is_analytic() {
    let fx = Fixture::nonrobust();
    let vd =
        solve_ergodic_vanishing_discount(fx.problem(), &fx.grid, &DEFAULT_RHO_SCHEDULE, &fx.v0)
            .unwrap();
    let ft = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let exact = 0.5 * 0.4 * 0.4 / (2.0 * 0.5);
    for field in [&vd, &ft] {
        assert!((field.lambda - exact).abs() < 1e-6, "{}", field.lambda);
        assert!(field.y.iter().all(|y| y.abs() < 1e-6));
        assert!(field.z_bound() < 1e-6);
    }
}

#[test]
fn large_uncertainty_solution_vanishes() {
    let fx = Fixture::large_uncertainty();
    let disc = solve_discounted(fx.problem(), &fx.grid, 0.05).unwrap();
    assert!(disc.y.iter().all(|y| y.abs() < 1e-8));
    let vd =
        solve_ergodic_vanishing_discount(fx.problem(), &fx.grid, &DEFAULT_RHO_SCHEDULE, &fx.v0)
            .unwrap();
    assert!(vd.lambda.abs() < 1e-8 && vd.z_bound() < 1e-8);
}

#[test]
fn model1_methods_agree() {
    let fx = Fixture::model1();
    let vd =
        solve_ergodic_vanishing_discount(fx.problem(), &fx.grid, &DEFAULT_RHO_SCHEDULE, &fx.v0)
            .unwrap();
    let ft = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-9, &fx.v0).unwrap();
    assert!(
        (vd.lambda - ft.lambda).abs() < 1e-3,
        "{} vs {}",
        vd.lambda,
        ft.lambda
    );
    let dy =
        vd.y.iter()
            .zip(&ft.y)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(dy < 1e-2, "{dy}");
    assert!(
        ft.residual_norm < 10.0 * fx.grid.spacing(0).powi(2),
        "{}",
        ft.residual_norm
    );
    let last = vd.rho_trace.last().unwrap();
    assert!((last.scaled_value - ft.lambda).abs() < 1e-3);
    let first = vd.rho_trace.first().unwrap();
    assert!((last.scaled_value - ft.lambda).abs() < (first.scaled_value - ft.lambda).abs());
    let d05 = solve_discounted(fx.problem(), &fx.grid, 0.05).unwrap();
    assert!((0.05 * d05.y_at(&fx.v0).0 - ft.lambda).abs() < 1e-2);
}

#[test]
fn shift_moves_lambda_only() {
    let fx = Fixture::model1();
    let shifted = Shifted {
        inner: fx.spec.clone(),
        shift: 0.3,
    };
    let base = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let p = PdeProblem::new(&fx.model, &shifted).unwrap();
    let up = solve_ergodic_false_transient(p, &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    assert!((up.lambda - base.lambda - 0.3).abs() < 1e-8);
    assert!(up.y.iter().zip(&base.y).all(|(a, b)| (a - b).abs() < 1e-7));
}

#[test]
fn extract_z_examples() {
    let grid = SpatialGrid::line(-1.0, 1.0, 201).unwrap();
    let kappa = Matrix::from_rows(&[&[1.0]]).unwrap();
    let y: Vec<f64> = grid.points().iter().map(|v| v[0] * v[0]).collect();
    let z = extract_z(&grid, &y, &kappa);
    for k in 1..200 {
        assert!((z.values[k] - 2.0 * grid.point(k)[0]).abs() < 1e-10);
    }
    let flat = extract_z(&grid, &vec![1.5; 201], &kappa);
    assert_eq!(flat.sup_norm, 0.0);

    let rho_bar: f64 = 0.6;
    let grid2 = SpatialGrid::new(2, vec![0], vec![-1.0], vec![1.0], vec![201]).unwrap();
    let k2 =
        Matrix::from_rows(&[&[rho_bar, (1.0 - rho_bar * rho_bar).sqrt()], &[0.0, 0.0]]).unwrap();
    let y: Vec<f64> = grid2.points().iter().map(|v| v[0].sin()).collect();
    let z = extract_z(&grid2, &y, &k2);
    let ratio = (1.0 - rho_bar * rho_bar).sqrt() / rho_bar;
    for k in 0..201 {
        let zk = z.at_node(k);
        if zk[0].abs() > 1e-12 {
            assert!((zk[1] / zk[0] - ratio).abs() < 1e-9);
        }
    }
}

#[test]
fn forward_value_examples() {
    let fx = Fixture::large_uncertainty();
    let f = solve_ergodic_false_transient(fx.problem(), &fx.grid, 0.01, 1e-10, &fx.v0).unwrap();
    let u = forward_process_value(UtilityClass::power(0.5).unwrap(), 1.0, 0.0, &[0.0], &f).unwrap();
    assert!((u.value - 2.0).abs() < 1e-12 && !u.extrapolated);
    let u = forward_process_value(UtilityClass::power(0.5).unwrap(), 4.0, 7.0, &[1.0], &f).unwrap();
    assert!((u.value - 4.0).abs() < 1e-9);
    let l = forward_process_value(UtilityClass::Log, 1.0, 0.0, &[0.4], &f).unwrap();
    assert!((l.value - f.y_at(&[0.4]).0).abs() < 1e-15);
    assert!(
        forward_process_value(UtilityClass::Log, 1.0, 0.0, &[99.0], &f)
            .unwrap()
            .extrapolated
    );
    assert!(forward_process_value(UtilityClass::Log, -1.0, 0.0, &[0.0], &f).is_err());
}

#[test]
fn finite_horizon_constant_generator() {
    let fx = Fixture::model1();
    let gen = ConstantGenerator {
        dim: 1,
        value: 0.25,
    };
    let p = PdeProblem::new(&fx.model, &gen).unwrap();
    let fh = solve_finite_horizon(p, &fx.grid, 2.0, 0.01).unwrap();
    assert!(fh.terminal().iter().all(|x| *x == 0.0));
    for (t, s) in fh.times.iter().zip(&fh.slices) {
        assert!(s.iter().all(|x| (x - 0.25 * (2.0 - t)).abs() < 1e-10));
    }
    let w = lower_value(0.5, 1.0, &[0.0], &fh).unwrap();
    assert!((w - 2.0 * 0.5f64.exp()).abs() < 1e-9);
    let zero = ConstantGenerator { dim: 1, value: 0.0 };
    let p0 = PdeProblem::new(&fx.model, &zero).unwrap();
    let f0 = solve_finite_horizon(p0, &fx.grid, 1.0, 0.01).unwrap();
    assert!(f0.slices.iter().all(|s| s.iter().all(|x| *x == 0.0)));
}

#[test]
fn step_size_violation_is_reported() {
    let fx = Fixture::model1();
    let grid = fx.grid.clone();
    let err = solve_ergodic_false_transient(fx.problem(), &grid, 10.0, 1e-9, &fx.v0);
    assert!(matches!(err, Err(crate::Error::StepSize { .. })), "{err:?}");
}
