//! Acceptance suite: ten criteria, one verdict line each.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! output. Exits nonzero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use robust_forward::drivers::{Shifted, ZPenalized};
use robust_forward::fixtures::Fixture;
use robust_forward::verification::{comparison_check, default_z_probes};
use robust_forward_cli::{run_experiment, Experiment, ExperimentConfig, RunOutcome};
use tempfile::TempDir;

struct Ctx {
    dir: TempDir,
    /// `methods agree` verdicts collected along the way, by fixture.
    agreement: Vec<(String, bool, String)>,
}

impl Ctx {
    fn run(
        &mut self,
        experiment: Experiment,
        tag: &str,
        edit: impl FnOnce(&mut ExperimentConfig),
    ) -> Result<RunOutcome> {
        let mut cfg = ExperimentConfig::defaults(experiment);
        cfg.out = self.dir.path().join(tag);
        edit(&mut cfg);
        let outcome = run_experiment(&cfg).with_context(|| format!("running {experiment}"))?;
        if let Some(c) = outcome.check("methods agree") {
            self.agreement
                .push((cfg.fixture.to_string(), c.passed, c.detail.clone()));
        }
        Ok(outcome)
    }
}

/// Requires every named check to be present and passing; returns their details.
fn require(outcome: &RunOutcome, names: &[&str]) -> Result<String> {
    let mut details = Vec::new();
    for name in names {
        let c = outcome
            .check(name)
            .with_context(|| format!("check `{name}` missing"))?;
        ensure!(c.passed, "{}", c.line());
        details.push(c.detail.clone());
    }
    Ok(details.join("; "))
}

fn all_passed(outcome: &RunOutcome, expected: usize) -> Result<()> {
    ensure!(
        outcome.checks.len() >= expected,
        "only {} checks ran",
        outcome.checks.len()
    );
    if let Some(c) = outcome.failures().next() {
        anyhow::bail!("{}", c.line());
    }
    Ok(())
}

fn within(start: Instant, budget: Duration) -> Result<Duration> {
    let t = start.elapsed();
    ensure!(t <= budget, "took {t:.1?}, budget {budget:?}");
    Ok(t)
}

fn analytic_rate(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::Nonrobust, "c1", |c| c.numerics.paths = 0)?;
    let d = require(&o, &["analytic rate", "flat field", "methods agree"])?;
    Ok(format!("{d} ({:.1?})", within(t, Duration::from_secs(10))?))
}

fn large_uncertainty(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::LargeUncertainty, "c2", |c| c.numerics.paths = 0)?;
    let d = require(
        &o,
        &[
            "zero rate",
            "zero gradient",
            "no market action",
            "nature cancels theta",
        ],
    )?;
    Ok(format!("{d} ({:.1?})", within(t, Duration::from_secs(10))?))
}

fn vanishing_discount(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::DiscountedFamily, "c3", |_| {})?;
    let d = require(&o, &["discounted values approach lambda"])?;
    Ok(format!("{d} ({:.1?})", within(t, Duration::from_secs(60))?))
}

fn oracle_and_saddle(cx: &mut Ctx) -> Result<(Result<String>, Result<String>)> {
    let t = Instant::now();
    let o = cx.run(Experiment::DriverOracle, "c4", |c| {
        c.numerics.oracle_points = 100
    })?;
    let elapsed = t.elapsed();
    let budget = |d: String| {
        ensure!(elapsed <= Duration::from_secs(60), "took {elapsed:.1?}");
        Ok(format!("{d} ({elapsed:.1?})"))
    };
    let oracle = require(
        &o,
        &[
            "model1 driver matches oracle",
            "model2 driver matches oracle",
            "section7 driver matches oracle",
            "maxmin point",
        ],
    )
    .and_then(budget);
    let saddle = require(&o, &["power saddle gap", "concave in each argument"]).and_then(budget);
    Ok((oracle, saddle))
}

fn martingale_suite(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::Model1, "c5", |c| {
        c.numerics.paths = 100_000;
        c.numerics.horizon = 1.0;
    })?;
    ensure!(
        o.reports.len() == 11,
        "{} martingale checks",
        o.reports.len()
    );
    all_passed(&o, 13)?;
    let d = require(&o, &["ratio(pi*, u*)", "saddle ratio within 1%"])?;
    Ok(format!(
        "{d}; 10 deviations on their side ({:.1?})",
        within(t, Duration::from_secs(180))?
    ))
}

fn game_value(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::RiskSensitive, "c6", |c| {
        c.numerics.paths = 100_000;
        c.numerics.horizon = 20.0;
    })?;
    ensure!(o.reports.len() == 11, "{} rate checks", o.reports.len());
    all_passed(&o, 13)?;
    let d = require(&o, &["rate(pi*, u*)"])?;
    Ok(format!(
        "{d}; sandwich holds for 10 deviations ({:.1?})",
        within(t, Duration::from_secs(180))?
    ))
}

fn comparison() -> Result<String> {
    let t = Instant::now();
    let fx = Fixture::model1();
    let probes = default_z_probes(1, 2.0, 41);
    let up = Shifted {
        inner: fx.spec.clone(),
        shift: 0.3,
    };
    let r = comparison_check(
        &fx.model, &up, &fx.spec, &fx.grid, &fx.v0, &probes, 0.01, 1e-10,
    )?;
    let shift = r.lambda1 - r.lambda2;
    ensure!((shift - 0.3).abs() <= 1e-4, "lambda shift {shift:.8}");
    let low = ZPenalized {
        inner: fx.spec.clone(),
        weight: 0.1,
    };
    let r2 = comparison_check(
        &fx.model, &fx.spec, &low, &fx.grid, &fx.v0, &probes, 0.01, 1e-10,
    )?;
    ensure!(
        r2.passed,
        "dominated pair: {:.8} < {:.8}",
        r2.lambda1,
        r2.lambda2
    );
    Ok(format!(
        "shift {shift:.8}; dominated pair {:.6} >= {:.6} ({:.1?})",
        r2.lambda1,
        r2.lambda2,
        within(t, Duration::from_secs(60))?
    ))
}

fn horizon(cx: &mut Ctx) -> Result<String> {
    let t = Instant::now();
    let o = cx.run(Experiment::HorizonConvergence, "c8", |_| {})?;
    let d = require(
        &o,
        &[
            "Cauchy difference",
            "state independence",
            "lower value matches ergodic prediction",
        ],
    )?;
    Ok(format!(
        "{d} ({:.1?})",
        within(t, Duration::from_secs(120))?
    ))
}

fn tree_bytes(dir: &Path, files: &[String]) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for f in files {
        out.push((f.clone(), fs::read(dir.join(f)).with_context(|| f.clone())?));
    }
    out.push(("summary.json".into(), fs::read(dir.join("summary.json"))?));
    Ok(out)
}

fn determinism(cx: &mut Ctx, suite: Instant) -> Result<String> {
    let edit = |c: &mut ExperimentConfig| c.numerics.paths = 5_000;
    let a = cx.run(Experiment::Model2, "c10a", edit)?;
    let b = cx.run(Experiment::Model2, "c10b", edit)?;
    ensure!(a.files == b.files, "different file sets");
    let (ta, tb) = (
        tree_bytes(&a.out_dir, &a.files)?,
        tree_bytes(&b.out_dir, &b.files)?,
    );
    for ((name, x), (_, y)) in ta.iter().zip(&tb) {
        ensure!(x == y, "{name} differs between reruns");
    }
    let rs = cx.run(Experiment::RiskSensitive, "c10c", |c| {
        c.numerics.paths = 500
    })?;
    let rs2 = cx.run(Experiment::RiskSensitive, "c10d", |c| {
        c.numerics.paths = 500
    })?;
    ensure!(
        tree_bytes(&rs.out_dir, &rs.files)? == tree_bytes(&rs2.out_dir, &rs2.files)?,
        "risk-sensitive reruns differ"
    );
    cx.run(Experiment::Section7, "c10e", |c| c.numerics.paths = 0)?;
    let mut fixtures: Vec<&str> = Vec::new();
    for (fixture, passed, detail) in &cx.agreement {
        ensure!(*passed, "{fixture}: {detail}");
        if !fixtures.contains(&fixture.as_str()) {
            fixtures.push(fixture);
        }
    }
    ensure!(fixtures.len() == 5, "agreement seen on {fixtures:?} only");
    let total = within(suite, Duration::from_secs(600))?;
    Ok(format!(
        "{} files identical across reruns; methods agree on {}; suite {total:.1?}",
        ta.len() + rs.files.len() + 1,
        fixtures.join(", ")
    ))
}

fn main() -> ExitCode {
    let suite = Instant::now();
    let mut cx = Ctx {
        dir: TempDir::new().expect("temporary directory"),
        agreement: Vec::new(),
    };
    let mut verdicts: Vec<(u32, &str, Result<String>)> = Vec::new();
    verdicts.push((1, "analytic rate", analytic_rate(&mut cx)));
    verdicts.push((
        2,
        "large-uncertainty degeneracy",
        large_uncertainty(&mut cx),
    ));
    verdicts.push((3, "vanishing discount", vanishing_discount(&mut cx)));
    let (oracle, saddle) = match oracle_and_saddle(&mut cx) {
        Ok(pair) => pair,
        Err(e) => (Err(anyhow::anyhow!("{e:#}")), Err(e)),
    };
    verdicts.push((4, "driver oracle", oracle));
    verdicts.push((5, "self-generation", martingale_suite(&mut cx)));
    verdicts.push((6, "risk-sensitive game value", game_value(&mut cx)));
    verdicts.push((7, "comparison", comparison()));
    verdicts.push((8, "horizon convergence", horizon(&mut cx)));
    verdicts.push((9, "saddle structure", saddle));
    verdicts.push((
        10,
        "determinism and cross-method",
        determinism(&mut cx, suite),
    ));

    let mut failed = 0;
    for (id, name, verdict) in &verdicts {
        match verdict {
            Ok(detail) => println!("criterion {id:>2} PASS {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {e:#}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1?}",
        verdicts.len() - failed,
        suite.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
