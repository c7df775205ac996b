//! Experiment pipelines.
//!
//! Every experiment solves the ergodic problem of its fixture with both
//! methods, writes the solution field and plots, and then runs its own
//! stage: the martingale suite, the risk-sensitive game, the finite-horizon
//! limit, the discounted family or the driver oracles. Each embedded check
//! contributes one named verdict to `summary.json`.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use robust_forward::drivers::{DriverSpec, UtilityClass, Variant};
use robust_forward::ergodic::{
    discounted_forward_diagnostics, ergodic_limit, forward_process_value,
    solve_ergodic_false_transient, solve_ergodic_vanishing_discount, MarkovianSolutionField,
};
use robust_forward::fixtures::{Fixture, FixtureKind, FixtureParams};
use robust_forward::market::{
    simulate_factor, ConstantFeedback, Feedback, MeasureShift, SimulationConfig,
};
use robust_forward::rng::PathNoise;
use robust_forward::verification::{
    brute_force_g, martingale_check, max_second_difference, maxmin_point, risk_sensitive_rate,
    saddle_gap, BoundKind, GridFeedback, MartingaleSetup, McConfig, MonteCarloReport,
    RiskSensitiveSetup, RunningPayoff, Strategies,
};
use robust_forward::{ConvexSet, Point};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::plot::{LinePlot, Series};

/// Closed-form drivers must match the grid oracle this closely.
pub const ORACLE_TOLERANCE: f64 = 2e-3;
/// Floor of the risk-sensitive saddle check.
pub const RATE_FLOOR: f64 = 5e-2;
/// Portfolio shift used by the deviation families.
const DEVIATION: f64 = 0.5;

/// One named verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {}",
            if self.passed { "pass" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub checks: Vec<Check>,
    pub reports: Vec<MonteCarloReport>,
    pub summary: Value,
    pub files: Vec<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Value of the check called `name`.
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn report(&self, name: &str) -> Option<&MonteCarloReport> {
        self.reports.iter().find(|r| r.check == name)
    }
}

/// Runs an experiment and writes its artifacts to `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .context("building the worker pool")?;
        pool.install(|| Runner::new(config)?.run())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Runner::new(config)?.run()
    }
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    fx: Arc<Fixture>,
    out: PathBuf,
    checks: Vec<Check>,
    reports: Vec<MonteCarloReport>,
    sections: serde_json::Map<String, Value>,
    files: Vec<String>,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let fx = Fixture::with_params(cfg.fixture, cfg.model.clone())
            .with_context(|| format!("building the {} fixture", cfg.fixture))?;
        fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        Ok(Self {
            cfg,
            fx: Arc::new(fx),
            out: cfg.out.clone(),
            checks: Vec::new(),
            reports: Vec::new(),
            sections: serde_json::Map::new(),
            files: Vec::new(),
        })
    }

    fn run(mut self) -> Result<RunOutcome> {
        let field = self.solve_stage()?;
        match self.cfg.experiment {
            Experiment::Model1
            | Experiment::Model2
            | Experiment::Nonrobust
            | Experiment::LargeUncertainty => {
                self.fixture_checks(&field)?;
                self.martingale_stage(&field)?;
            }
            Experiment::Section7 => {
                self.section7_point()?;
                self.concavity_probe()?;
            }
            Experiment::RiskSensitive => self.game_stage(&field)?,
            Experiment::HorizonConvergence => self.horizon_stage(&field)?,
            Experiment::DiscountedFamily => self.discounted_stage(&field)?,
            Experiment::DriverOracle => self.oracle_stage()?,
        }
        self.finish()
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check::new(name, passed, detail));
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn mc(&self, horizon: f64, dt: f64, salt: u64) -> McConfig {
        let n = &self.cfg.numerics;
        McConfig::new(horizon, dt, n.paths, self.cfg.seed.wrapping_add(salt))
    }

    // ----- ergodic solves -------------------------------------------------

    fn solve_stage(&mut self) -> Result<MarkovianSolutionField> {
        let n = &self.cfg.numerics;
        let fx = self.fx.clone();
        let vd = solve_ergodic_vanishing_discount(fx.problem(), &fx.grid, &n.rho_schedule, &fx.v0)
            .context("vanishing-discount solve")?;
        let ft = solve_ergodic_false_transient(
            fx.problem(),
            &fx.grid,
            n.transient_dt,
            n.transient_tol,
            &fx.v0,
        )
        .context("false-transient solve")?;
        let lambda_gap = (vd.lambda - ft.lambda).abs();
        let y_gap =
            vd.y.iter()
                .zip(&ft.y)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let h = fx.grid.spacing(0);
        let residual_bound = 10.0 * h * h;
        self.check(
            "methods agree",
            lambda_gap <= 1e-3 && y_gap <= 1e-2,
            format!("|dlambda| = {lambda_gap:.3e}, |dy| = {y_gap:.3e}"),
        );
        self.check(
            "stationary residual",
            vd.residual_norm <= residual_bound && ft.residual_norm <= residual_bound,
            format!(
                "{:.3e} and {:.3e} against 10 h^2 = {residual_bound:.3e}",
                vd.residual_norm, ft.residual_norm
            ),
        );
        self.sections.insert(
            "solve".into(),
            json!({
                "vanishing_discount": vd.summary(),
                "false_transient": ft.summary(),
                "lambda_gap": lambda_gap,
                "y_gap": y_gap,
                "grid_nodes": fx.grid.len(),
                "grid_spacing": h,
            }),
        );

        let mut csv = Vec::new();
        vd.write_csv(&mut csv)?;
        self.write("fields.csv", csv)?;

        let coords = |f: &MarkovianSolutionField| -> Vec<f64> {
            (0..f.grid.len())
                .map(|k| f.grid.point(k)[f.grid.axes()[0]])
                .collect()
        };
        let xs = coords(&vd);
        let y_plot = LinePlot::new(format!("{}: y(v)", self.cfg.fixture), "v", "y(v)")
            .with(Series::line(
                "vanishing discount",
                xs.iter().copied().zip(vd.y.iter().copied()).collect(),
            ))
            .with(Series::line(
                "false transient",
                xs.iter().copied().zip(ft.y.iter().copied()).collect(),
            ));
        self.write("y.svg", y_plot.render())?;
        let mut z_plot = LinePlot::new(format!("{}: z(v)", self.cfg.fixture), "v", "z(v)");
        for c in 0..vd.z.dim {
            let pts = xs
                .iter()
                .enumerate()
                .map(|(k, x)| (*x, vd.z.at_node(k)[c]))
                .collect();
            z_plot = z_plot.with(Series::line(format!("z_{}", c + 1), pts));
        }
        self.write("z.svg", z_plot.render())?;
        let trace: Vec<(f64, f64)> = vd
            .rho_trace
            .iter()
            .map(|e| (e.rho, e.scaled_value))
            .collect();
        let (lo, hi) = trace
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), (r, _)| {
                (a.min(*r), b.max(*r))
            });
        let rho_plot = LinePlot::new("discounted values at v0", "rho", "rho y_rho(v0)")
            .log_x()
            .with(Series::markers("rho y_rho(v0)", trace))
            .with(Series::line(
                "lambda (false transient)",
                vec![(lo, ft.lambda), (hi, ft.lambda)],
            ));
        self.write("rho_trace.svg", rho_plot.render())?;
        self.sections
            .insert("false_transient_lambda".into(), json!(ft.lambda));
        Ok(vd)
    }

    // ----- fixture-specific structure ------------------------------------

    fn fixture_checks(&mut self, field: &MarkovianSolutionField) -> Result<()> {
        let p = &self.cfg.model;
        let default_sets = p.pi.is_none() && p.u.is_none();
        let lambda_ft = self.sections["false_transient_lambda"]
            .as_f64()
            .unwrap_or(f64::NAN);
        match self.cfg.fixture {
            FixtureKind::NonRobust if default_sets && p.theta_max == 0.0 && p.u_radius == 0.0 => {
                let exact = p.delta * p.theta0 * p.theta0 / (2.0 * (1.0 - p.delta));
                let err = (field.lambda - exact).abs().max((lambda_ft - exact).abs());
                self.check(
                    "analytic rate",
                    err <= 1e-4,
                    format!("lambda = {:.8}, exact {exact:.8}", field.lambda),
                );
                let y = field.y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let z = field.z_bound();
                self.check(
                    "flat field",
                    y <= 1e-6 && z <= 1e-6,
                    format!("sup|y| = {y:.2e}, sup|z| = {z:.2e}"),
                );
            }
            FixtureKind::LargeUncertainty if default_sets => {
                let (mut pi_max, mut u_err) = (0.0_f64, 0.0_f64);
                for k in 0..field.grid.len() {
                    let v = field.grid.point(k);
                    let z = field.z.at_node(k);
                    let pi = self.fx.spec.pi_star(&v, z)?;
                    let u = self.fx.spec.u_star(&v, z)?;
                    let theta = self.fx.spec.theta(&v);
                    pi_max = pi.iter().fold(pi_max, |m, x| m.max(x.abs()));
                    u_err = u
                        .iter()
                        .zip(&theta)
                        .fold(u_err, |m, (a, b)| m.max((a + b).abs()));
                }
                let lam = field.lambda.abs().max(lambda_ft.abs());
                self.check("zero rate", lam <= 1e-6, format!("|lambda| = {lam:.2e}"));
                self.check(
                    "zero gradient",
                    field.z_bound() <= 1e-6,
                    format!("sup|z| = {:.2e}", field.z_bound()),
                );
                self.check(
                    "no market action",
                    pi_max <= 1e-6,
                    format!("sup|pi*| = {pi_max:.2e}"),
                );
                self.check(
                    "nature cancels theta",
                    u_err <= 1e-6,
                    format!("sup|u* + theta| = {u_err:.2e}"),
                );
                self.sections.insert("pi_star_sup".into(), json!(pi_max));
            }
            _ => {}
        }
        Ok(())
    }

    // ----- self-generation ------------------------------------------------

    fn martingale_stage(&mut self, field: &MarkovianSolutionField) -> Result<()> {
        let n = &self.cfg.numerics;
        if n.paths == 0 || !matches!(self.fx.spec.utility(), UtilityClass::Power { .. }) {
            return Ok(());
        }
        let spec = &self.fx.spec;
        let strategies = Strategies::new(spec, field);
        let pi_star = strategies.pi_star()?;
        let u_star = strategies.u_star()?;
        let setup = MartingaleSetup {
            model: &self.fx.model,
            utility: spec.utility(),
            field,
            x0: n.x0,
        };
        let mut reports = Vec::new();

        let cfg = self.mc(n.horizon, n.mc_dt, 0);
        let saddle = martingale_check(
            setup,
            "ratio(pi*, u*)",
            &pi_star,
            Arc::new(u_star.clone()),
            BoundKind::Equals,
            &cfg,
        )?;
        let within = (saddle.estimate - 1.0).abs() <= 1e-2;
        let detail = format!("|ratio - 1| = {:.2e}", (saddle.estimate - 1.0).abs());
        reports.push(saddle);

        for (i, (name, pi)) in pi_deviations(spec, &pi_star).into_iter().enumerate() {
            let beta = strategies.beta_star(pi.as_ref())?;
            let cfg = self.mc(n.horizon, n.mc_dt, 1 + i as u64);
            let label = format!("ratio({name}, beta*)");
            reports.push(martingale_check(
                setup,
                &label,
                pi.as_ref(),
                Arc::new(beta),
                BoundKind::AtMost,
                &cfg,
            )?);
        }
        for (i, (name, u)) in u_scenarios(spec, field, &u_star)?.into_iter().enumerate() {
            let alpha = strategies.alpha_star(&u)?;
            let cfg = self.mc(n.horizon, n.mc_dt, 11 + i as u64);
            let label = format!("ratio(alpha*, {name})");
            reports.push(martingale_check(
                setup,
                &label,
                &alpha,
                Arc::new(u),
                BoundKind::AtLeast,
                &cfg,
            )?);
        }
        self.check("saddle ratio within 1%", within, detail);
        self.sections
            .insert("pi_cap_hits".into(), json!(pi_star.cap_hits()));
        self.push_reports(reports);
        Ok(())
    }

    fn push_reports(&mut self, reports: Vec<MonteCarloReport>) {
        for r in reports {
            let line = r.line();
            let detail = line.split_once(": ").map_or(line.as_str(), |(_, d)| d);
            self.checks
                .push(Check::new(r.check.clone(), r.passed, detail));
            self.reports.push(r);
        }
    }

    // ----- risk-sensitive game -------------------------------------------

    fn game_stage(&mut self, field: &MarkovianSolutionField) -> Result<()> {
        let n = self.cfg.numerics.clone();
        if n.paths == 0 {
            return Ok(());
        }
        let spec = &self.fx.spec;
        let delta = match spec.utility() {
            UtilityClass::Power { delta } => delta,
            other => anyhow::bail!("the risk-sensitive game needs power utility, got {other}"),
        };
        let lambda = field.lambda;
        let strategies = Strategies::new(spec, field);
        let pi_star = strategies.pi_star()?;
        let u_star = strategies.u_star()?;
        let payoff = RunningPayoff::new(delta)?;
        let setup = RiskSensitiveSetup {
            model: &self.fx.model,
            payoff,
            v0: &self.fx.v0,
        };
        let mut trajectories = Vec::new();
        let mut reports = Vec::new();
        let mut run = |name: String,
                       pi: Arc<dyn Feedback>,
                       u: Arc<dyn Feedback>,
                       bound: BoundKind,
                       floor: f64,
                       salt: u64|
         -> Result<()> {
            let cfg = self.mc(n.horizon, n.mc_dt, 100 + salt);
            let r = risk_sensitive_rate(
                setup,
                &name,
                pi,
                u,
                &cfg,
                &n.checkpoints,
                (bound, lambda),
                floor,
            )?;
            trajectories.push((
                name,
                r.trajectory
                    .iter()
                    .map(|p| (p.horizon, p.rate))
                    .collect::<Vec<_>>(),
            ));
            reports.push(r);
            Ok(())
        };
        run(
            "rate(pi*, u*)".into(),
            Arc::new(pi_star.clone()),
            Arc::new(u_star.clone()),
            BoundKind::Equals,
            RATE_FLOOR,
            0,
        )?;
        for (i, (name, pi)) in pi_deviations(spec, &pi_star).into_iter().enumerate() {
            run(
                format!("rate({name}, u*)"),
                pi,
                Arc::new(u_star.clone()),
                BoundKind::AtMost,
                0.0,
                1 + i as u64,
            )?;
        }
        for (i, (name, u)) in u_scenarios(spec, field, &u_star)?.into_iter().enumerate() {
            run(
                format!("rate(pi*, {name})"),
                Arc::new(pi_star.clone()),
                Arc::new(u),
                BoundKind::AtLeast,
                0.0,
                11 + i as u64,
            )?;
        }
        let mut plot = LinePlot::new("risk-sensitive rate", "T", "(1/T) log E exp(int L)");
        for (name, pts) in &trajectories {
            plot = plot.with(Series::line(name.clone(), pts.clone()));
        }
        plot = plot.with(Series::line(
            "lambda",
            vec![(0.0, lambda), (n.horizon, lambda)],
        ));
        self.write("rate_vs_T.svg", plot.render())?;
        self.sections.insert(
            "game".into(),
            json!({
                "lambda": lambda,
                "trajectories": reports.iter().map(|r| json!({"check": r.report.check, "points": r.trajectory})).collect::<Vec<_>>(),
            }),
        );
        self.push_reports(reports.into_iter().map(|r| r.report).collect());
        Ok(())
    }

    // ----- finite horizon -------------------------------------------------

    fn horizon_stage(&mut self, field: &MarkovianSolutionField) -> Result<()> {
        let n = &self.cfg.numerics;
        let fx = self.fx.clone();
        let report = ergodic_limit(fx.problem(), &fx.grid, field, &n.horizons, n.finite_dt)?;
        let last = report.rows.last().expect("at least one horizon");
        let cauchy = report.last_cauchy_diff();
        if let Some(c) = cauchy {
            self.check(
                "Cauchy difference",
                c <= 1e-3,
                format!("max_v |L(T) - L(T')| = {c:.3e} at T = {}", last.horizon),
            );
        }
        self.check(
            "state independence",
            last.spread <= 1e-3,
            format!("spread of L over the grid = {:.3e}", last.spread),
        );
        if let UtilityClass::Power { delta } = fx.spec.utility() {
            let x = n.x0;
            let w = x.powf(delta) / delta * last.value_at_v0.exp();
            let u0 = forward_process_value(fx.spec.utility(), x, 0.0, &fx.v0, field)?.value;
            let ratio = w * (-report.lambda * last.horizon - report.l_estimate).exp() / u0;
            self.check(
                "lower value matches ergodic prediction",
                (0.999..=1.001).contains(&ratio),
                format!("w_T e^(-lambda T - L) / U(x, 0) = {ratio:.6}"),
            );
            self.sections.insert("value_ratio".into(), json!(ratio));
        }
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        self.write("l_hat.csv", csv)?;
        let pts: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.horizon, r.l_hat)).collect();
        let band: Vec<(f64, f64)> = report
            .rows
            .iter()
            .map(|r| (r.horizon, r.l_hat_max))
            .collect();
        let low: Vec<(f64, f64)> = report
            .rows
            .iter()
            .map(|r| (r.horizon, r.l_hat_min))
            .collect();
        let plot = LinePlot::new("finite-horizon constant", "T", "L(T)")
            .with(Series::markers("L(T, v0)", pts))
            .with(Series::line("max over grid", band))
            .with(Series::line("min over grid", low));
        self.write("l_hat_vs_T.svg", plot.render())?;
        self.sections
            .insert("horizon".into(), serde_json::to_value(&report)?);
        Ok(())
    }

    // ----- discounted family ----------------------------------------------

    fn discounted_stage(&mut self, field: &MarkovianSolutionField) -> Result<()> {
        let n = self.cfg.numerics.clone();
        let lambda = self.sections["false_transient_lambda"]
            .as_f64()
            .unwrap_or(field.lambda);
        let trace = &field.rho_trace;
        let first = trace.first().expect("nonempty schedule");
        let last = trace.last().expect("nonempty schedule");
        let (e0, e1) = (
            (first.scaled_value - lambda).abs(),
            (last.scaled_value - lambda).abs(),
        );
        self.check(
            "discounted values approach lambda",
            e1 <= 1e-3 && e1 < e0,
            format!(
                "|rho y_rho(v0) - lambda| = {e0:.3e} at rho = {}, {e1:.3e} at rho = {}",
                first.rho, last.rho
            ),
        );
        if n.paths > 0 {
            let fx = self.fx.clone();
            let sim = SimulationConfig::new(n.horizon, n.mc_dt, n.paths, self.cfg.seed);
            let paths = simulate_factor(&fx.model, &MeasureShift::Base, &sim, &fx.v0)?;
            let rep = discounted_forward_diagnostics(
                fx.problem(),
                &fx.spec,
                &fx.grid,
                &n.rho_schedule,
                field,
                &paths,
            )?;
            let mut csv = String::from("rho,ratio_max_error,strategy_gap,strategy_gap_se\n");
            for r in &rep.rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    r.rho, r.ratio_max_error, r.strategy_gap, r.strategy_gap_se
                ));
            }
            self.write("discounted.csv", csv)?;
            self.sections
                .insert("discounted_forward".into(), serde_json::to_value(&rep)?);
        }
        Ok(())
    }

    // ----- pointwise game -------------------------------------------------

    fn section7_point(&mut self) -> Result<()> {
        let res = 1e-3;
        let spec = DriverSpec::constant_theta(
            UtilityClass::Log,
            ConvexSet::interval(0.0, 1.0)?,
            ConvexSet::interval(0.0, 1.0)?,
            &[-0.5],
            Variant::Section7,
        )?;
        let m = maxmin_point(&spec, &[0.0], &[0.3], res)?;
        let s = saddle_gap(&spec, &[0.0], &[0.3], res)?;
        let ok =
            (m.value + 0.12).abs() <= 1e-9 && (m.pi[0] - 0.2).abs() <= 1e-9 && m.reply[0] == 1.0;
        self.check(
            "maxmin point",
            ok,
            format!(
                "maxmin = {:.6}, pi = {:.4}, reply = {:.4} at theta = -0.5, z = 0.3",
                m.value, m.pi[0], m.reply[0]
            ),
        );
        self.check(
            "no saddle point",
            s.gap > 2.0 * res,
            format!("minmax - maxmin = {:.4}", s.gap),
        );
        let closed = spec.driver(&[0.0], &[0.3])?;
        self.check(
            "closed form at the point",
            (closed + 0.12).abs() <= 1e-12,
            format!("G = {closed:.12}"),
        );
        self.sections
            .insert("section7_point".into(), json!({"maxmin": m, "gap": s}));
        Ok(())
    }

    fn concavity_probe(&mut self) -> Result<()> {
        let n = &self.cfg.numerics;
        let mut noise = PathNoise::new(self.cfg.seed, 7);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n.oracle_points {
            let spec = DriverSpec::constant_theta(
                UtilityClass::Log,
                ConvexSet::interval(0.0, 1.0)?,
                ConvexSet::interval(0.0, 1.0)?,
                &[noise.uniform(-1.0, 0.0)],
                Variant::Section7,
            )?;
            let z = [noise.uniform(-1.0, 1.0)];
            worst = worst.max(max_second_difference(
                &spec,
                &[0.0],
                &z,
                n.oracle_resolution,
            )?);
        }
        self.check(
            "concave in each argument",
            worst <= 1e-12,
            format!(
                "largest second difference {worst:.2e} over {} probes",
                n.oracle_points
            ),
        );
        Ok(())
    }

    fn saddle_probe(&mut self) -> Result<()> {
        let n = &self.cfg.numerics;
        let res = n.oracle_resolution;
        let base = Fixture::model1();
        let mut noise = PathNoise::new(self.cfg.seed, 8);
        let (mut largest, mut smallest) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..n.oracle_points {
            let theta = base.spec.theta(&[noise.uniform(-3.0, 3.0)]);
            let spec = DriverSpec::constant_theta(
                base.spec.utility(),
                ConvexSet::interval(-2.0, 2.0)?,
                ConvexSet::interval(-0.5, 0.5)?,
                &theta,
                Variant::Generic,
            )?;
            let s = saddle_gap(&spec, &[0.0], &[noise.uniform(-1.0, 1.0)], res)?;
            largest = largest.max(s.gap);
            smallest = smallest.min(s.gap);
        }
        self.check(
            "power saddle gap",
            largest <= 2.0 * res,
            format!(
                "largest gap {largest:.2e} against 2 res = {:.0e}",
                2.0 * res
            ),
        );
        self.check(
            "weak duality",
            smallest >= -2.0 * res,
            format!("smallest gap {smallest:.2e}"),
        );
        Ok(())
    }

    fn oracle_stage(&mut self) -> Result<()> {
        let n = self.cfg.numerics.clone();
        let mut csv = String::from("fixture,v,z,closed_form,oracle,abs_diff\n");
        let mut summary = serde_json::Map::new();
        for (i, kind) in [
            FixtureKind::Model1,
            FixtureKind::Model2,
            FixtureKind::Section7,
        ]
        .into_iter()
        .enumerate()
        {
            let fx = Fixture::with_params(kind, FixtureParams::for_kind(kind))?;
            let d = fx.spec.dim();
            let axis = fx.grid.axes()[0];
            let (lo, hi) = (fx.grid.lower(0), fx.grid.upper(0));
            let mut noise = PathNoise::new(self.cfg.seed, 20 + i);
            let points: Vec<(Point, Point)> = (0..n.oracle_points)
                .map(|_| {
                    let mut v = fx.v0.clone();
                    v[axis] = noise.uniform(lo, hi);
                    let z: Point = (0..d).map(|_| noise.uniform(-1.0, 1.0)).collect();
                    (v, z)
                })
                .collect();
            // The quadratic-penalty driver is kinked, so its grid error is
            // first order in the spacing; its sets are small enough for a
            // finer grid.
            let res = if kind == FixtureKind::Section7 {
                n.oracle_resolution.min(1e-3)
            } else {
                n.oracle_resolution
            };
            let mut worst = 0.0_f64;
            for (v, z) in &points {
                let g = fx.spec.driver(v, z)?;
                let b = brute_force_g(&fx.spec, v, z, res)?;
                worst = worst.max((g - b).abs());
                csv.push_str(&format!(
                    "{kind},{},{},{g},{b},{}\n",
                    join(v),
                    join(z),
                    (g - b).abs()
                ));
            }
            self.check(
                &format!("{kind} driver matches oracle"),
                worst <= ORACLE_TOLERANCE,
                format!(
                    "max |G - oracle| = {worst:.2e} over {} points at resolution {res}",
                    points.len()
                ),
            );
            summary.insert(kind.to_string(), json!(worst));
        }
        self.write("oracle.csv", csv)?;
        self.sections
            .insert("oracle_max_error".into(), Value::Object(summary));
        self.section7_point()?;
        self.saddle_probe()?;
        self.concavity_probe()
    }

    // ----- outputs --------------------------------------------------------

    fn finish(mut self) -> Result<RunOutcome> {
        self.write(
            "checks.json",
            serde_json::to_string_pretty(&self.reports)? + "\n",
        )?;
        let mut config = serde_json::to_value(self.cfg)?;
        if let Value::Object(m) = &mut config {
            m.remove("out");
        }
        let mut files = self.files.clone();
        files.push("summary.json".into());
        let summary = json!({
            "experiment": self.cfg.experiment,
            "fixture": self.cfg.fixture,
            "seed": self.cfg.seed,
            "config": config,
            "lambda": self.sections.get("solve").map(|s| s["vanishing_discount"]["lambda"].clone()),
            "results": Value::Object(self.sections.clone()),
            "checks": self.checks,
            "passed": self.checks.iter().all(|c| c.passed),
            "files": files,
        });
        self.write(
            "summary.json",
            serde_json::to_string_pretty(&summary)? + "\n",
        )?;
        Ok(RunOutcome {
            out_dir: self.out,
            checks: self.checks,
            reports: self.reports,
            summary,
            files: self.files,
        })
    }
}

fn join(p: &[f64]) -> String {
    p.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn first_axis(d: usize, value: f64) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = value;
    e
}

/// Five feedback portfolios away from the saddle, moving only the first
/// (traded) coordinate.
fn pi_deviations(spec: &DriverSpec, pi_star: &GridFeedback) -> Vec<(String, Arc<dyn Feedback>)> {
    let d = spec.dim();
    vec![
        (
            "pi = 0".into(),
            Arc::new(ConstantFeedback(vec![0.0; d])) as Arc<dyn Feedback>,
        ),
        (
            format!("pi* + {DEVIATION}"),
            Arc::new(pi_star.offset(&first_axis(d, DEVIATION))),
        ),
        (
            format!("pi* - {DEVIATION}"),
            Arc::new(pi_star.offset(&first_axis(d, -DEVIATION))),
        ),
        (
            "pi = 1".into(),
            Arc::new(ConstantFeedback(first_axis(d, 1.0))),
        ),
        (
            "pi = -0.5".into(),
            Arc::new(ConstantFeedback(first_axis(d, -0.5))),
        ),
    ]
}

/// Five admissible scenarios other than `u*`: the origin, the two corners of
/// the bounding box, the reflection `−u*` and the half-way point `u*/2`,
/// each projected onto U.
fn u_scenarios(
    spec: &DriverSpec,
    field: &MarkovianSolutionField,
    u_star: &GridFeedback,
) -> Result<Vec<(String, GridFeedback)>> {
    let u_set = spec.u_set();
    let (lo, hi) = u_set.bounding_box(1.0);
    let d = spec.dim();
    let constant = |c: &[f64]| -> Result<GridFeedback> {
        let p = u_set.project(c)?;
        Ok(GridFeedback::tabulate(
            &field.grid,
            d,
            |_, _| Ok(p.clone()),
        )?)
    };
    let mapped = |scale: f64| -> Result<GridFeedback> {
        Ok(GridFeedback::tabulate(&field.grid, d, |k, _| {
            let u: Vec<f64> = u_star.at_node(k).iter().map(|x| scale * x).collect();
            u_set.project(&u)
        })?)
    };
    Ok(vec![
        ("u = 0".into(), constant(&vec![0.0; d])?),
        ("u = lower corner".into(), constant(&lo)?),
        ("u = upper corner".into(), constant(&hi)?),
        ("u = -u*".into(), mapped(-1.0)?),
        ("u = u*/2".into(), mapped(0.5)?),
    ])
}
