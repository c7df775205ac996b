use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use robust_forward::fixtures::{Fixture, FixtureKind, FixtureParams};
use robust_forward::verification::{brute_force_g, saddle_gap};
use robust_forward_cli::config::{parse_list, Experiment, ExperimentConfig};
use robust_forward_cli::run_experiment;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "robust-forward",
    version,
    about = "Ergodic solvers and structural checks for worst-case forward utilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the ergodic problem of a fixture with both methods.
    Solve(FixtureArgs),
    /// Solve and run the self-generation martingale suite.
    Verify(FixtureArgs),
    /// Risk-sensitive game value and its sandwich.
    Game(FixtureArgs),
    /// Finite-horizon convergence to the ergodic solution.
    Horizon(FixtureArgs),
    /// Pointwise driver evaluation.
    Driver {
        #[command(subcommand)]
        command: DriverCommand,
    },
    /// Run a named experiment.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum DriverCommand {
    /// Evaluate G, π*, u* and the grid oracle at one (v, z).
    Eval {
        #[arg(long, default_value = "model1")]
        fixture: String,
        /// Factor state, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Gradient argument, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 1e-2)]
        resolution: f64,
    },
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(long, default_value = "model1")]
    fixture: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Default)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    grid_n: Option<usize>,
    /// Decreasing discount rates, e.g. `0.2,0.1,0.05,0.02,0.01`.
    #[arg(long)]
    rho_schedule: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Constant market price of risk (sets the tanh part to zero).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Power exponent δ.
    #[arg(long)]
    delta: Option<f64>,
}

impl Common {
    fn build(
        &self,
        experiment: Experiment,
        fixture: Option<FixtureKind>,
    ) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::defaults(experiment),
        };
        if cfg.experiment != experiment {
            bail!(
                "config file is for experiment `{}`, not `{experiment}`",
                cfg.experiment
            );
        }
        if let Some(kind) = fixture {
            if kind != cfg.fixture {
                cfg.fixture = kind;
                cfg.model = FixtureParams::for_kind(kind);
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(paths) = self.paths {
            cfg.numerics.paths = paths;
        }
        if let Some(n) = self.grid_n {
            cfg.model.grid_n = n;
        }
        if let Some(list) = &self.rho_schedule {
            cfg.numerics.rho_schedule = parse_list(list).context("--rho-schedule")?;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        if let Some(theta) = self.theta {
            cfg.model.theta0 = theta;
            cfg.model.theta_max = 0.0;
        }
        if let Some(delta) = self.delta {
            cfg.model.delta = delta;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fixture_kind(name: &str) -> Result<FixtureKind> {
    Ok(name.parse::<FixtureKind>()?)
}

fn fixture_experiment(kind: FixtureKind) -> Experiment {
    match kind {
        FixtureKind::Model1 => Experiment::Model1,
        FixtureKind::NonRobust => Experiment::Nonrobust,
        FixtureKind::LargeUncertainty => Experiment::LargeUncertainty,
        FixtureKind::Model2 => Experiment::Model2,
        FixtureKind::Section7 => Experiment::Section7,
    }
}

fn execute(cfg: ExperimentConfig) -> Result<bool> {
    eprintln!(
        "running {} on {} -> {}",
        cfg.experiment,
        cfg.fixture,
        cfg.out.display()
    );
    let outcome = run_experiment(&cfg)?;
    if let Some(lambda) = outcome.summary.get("lambda").and_then(|v| v.as_f64()) {
        println!("lambda = {lambda:.10}");
    }
    for check in &outcome.checks {
        println!("{}", check.line());
    }
    for failed in outcome.failures() {
        eprintln!("check failed: {}", failed.name);
    }
    Ok(outcome.passed())
}

fn driver_eval(fixture: &str, v: &str, z: &str, resolution: f64) -> Result<()> {
    let fx = Fixture::new(fixture_kind(fixture)?)?;
    let mut v_full = fx.v0.to_vec();
    let given = parse_list(v)?;
    for (slot, x) in v_full.iter_mut().zip(&given) {
        *slot = *x;
    }
    let z = parse_list(z)?;
    let eval = fx.spec.evaluate(&v_full, &z)?;
    let oracle = brute_force_g(&fx.spec, &v_full, &z, resolution)?;
    let gap = saddle_gap(&fx.spec, &v_full, &z, resolution)?;
    let out = json!({
        "fixture": fixture,
        "v": v_full,
        "z": z,
        "g": eval.g,
        "pi_star": eval.pi_star.to_vec(),
        "u_star": eval.u_star.to_vec(),
        "oracle": oracle,
        "oracle_resolution": resolution,
        "saddle_gap": gap,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { experiment, common } => common.build(experiment, None).and_then(execute),
        Command::Solve(args) => fixture_kind(&args.fixture).and_then(|k| {
            let mut cfg = args.common.build(fixture_experiment(k), Some(k))?;
            cfg.numerics.paths = 0;
            execute(cfg)
        }),
        Command::Verify(args) => fixture_kind(&args.fixture)
            .and_then(|k| args.common.build(fixture_experiment(k), Some(k)))
            .and_then(execute),
        Command::Game(args) => fixture_kind(&args.fixture)
            .and_then(|k| args.common.build(Experiment::RiskSensitive, Some(k)))
            .and_then(execute),
        Command::Horizon(args) => fixture_kind(&args.fixture)
            .and_then(|k| args.common.build(Experiment::HorizonConvergence, Some(k)))
            .and_then(execute),
        Command::Driver {
            command:
                DriverCommand::Eval {
                    fixture,
                    v,
                    z,
                    resolution,
                },
        } => driver_eval(&fixture, &v, &z, resolution).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
