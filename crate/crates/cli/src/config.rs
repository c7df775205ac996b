//! Experiment configuration.
//!
//! A config file is TOML with the keys of [`ExperimentConfig`]; model
//! parameters live under `[model]` and numerical settings under
//! `[numerics]`. Every key is optional except `experiment`, and missing keys
//! take the defaults of the chosen experiment rather than global ones.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use robust_forward::ergodic::DEFAULT_RHO_SCHEDULE;
use robust_forward::fixtures::{FixtureKind, FixtureParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Model1,
    Model2,
    Nonrobust,
    LargeUncertainty,
    Section7,
    RiskSensitive,
    HorizonConvergence,
    DiscountedFamily,
    DriverOracle,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Model1,
        Experiment::Model2,
        Experiment::Nonrobust,
        Experiment::LargeUncertainty,
        Experiment::Section7,
        Experiment::RiskSensitive,
        Experiment::HorizonConvergence,
        Experiment::DiscountedFamily,
        Experiment::DriverOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Model1 => "model1",
            Experiment::Model2 => "model2",
            Experiment::Nonrobust => "nonrobust",
            Experiment::LargeUncertainty => "large_uncertainty",
            Experiment::Section7 => "section7",
            Experiment::RiskSensitive => "risk_sensitive",
            Experiment::HorizonConvergence => "horizon_convergence",
            Experiment::DiscountedFamily => "discounted_family",
            Experiment::DriverOracle => "driver_oracle",
        }
    }

    /// Market fixture an experiment runs on by default.
    pub fn default_fixture(self) -> FixtureKind {
        match self {
            Experiment::Model2 => FixtureKind::Model2,
            Experiment::Nonrobust => FixtureKind::NonRobust,
            Experiment::LargeUncertainty => FixtureKind::LargeUncertainty,
            Experiment::Section7 => FixtureKind::Section7,
            _ => FixtureKind::Model1,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| anyhow!("unknown experiment `{s}`"))
    }
}

/// Numerical settings. Monte Carlo fields apply to the stages that simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Step of the false-transient solver.
    pub transient_dt: f64,
    /// Stopping tolerance of the false-transient solver.
    pub transient_tol: f64,
    pub rho_schedule: Vec<f64>,
    /// Monte Carlo horizon `T`.
    pub horizon: f64,
    /// Euler step of the Monte Carlo simulations.
    pub mc_dt: f64,
    /// Monte Carlo paths; 0 skips the simulation stages.
    pub paths: usize,
    /// Intermediate horizons reported by the risk-sensitive rate.
    pub checkpoints: Vec<f64>,
    /// Horizons of the finite-horizon convergence table.
    pub horizons: Vec<f64>,
    /// Step of the finite-horizon march; `T_max/2000` when absent.
    pub finite_dt: Option<f64>,
    pub oracle_resolution: f64,
    pub oracle_points: usize,
    /// Initial wealth.
    pub x0: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            transient_dt: 0.01,
            transient_tol: 1e-10,
            rho_schedule: DEFAULT_RHO_SCHEDULE.to_vec(),
            horizon: 1.0,
            mc_dt: 0.01,
            paths: 20_000,
            checkpoints: Vec::new(),
            horizons: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            finite_dt: None,
            oracle_resolution: 1e-2,
            oracle_points: 100,
            x0: 1.0,
        }
    }
}

impl Numerics {
    pub fn for_experiment(experiment: Experiment) -> Self {
        let base = Self::default();
        match experiment {
            Experiment::RiskSensitive => Self {
                horizon: 20.0,
                mc_dt: 0.02,
                checkpoints: vec![5.0, 10.0, 15.0],
                ..base
            },
            Experiment::DiscountedFamily => Self {
                horizon: 2.0,
                paths: 400,
                ..base
            },
            _ => base,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub fixture: FixtureKind,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 1 runs everything sequentially.
    pub jobs: usize,
    pub model: FixtureParams,
    pub numerics: Numerics,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    /// Complete defaults of an experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let fixture = experiment.default_fixture();
        Self {
            experiment,
            fixture,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out").join(experiment.name()),
            jobs: 1,
            model: FixtureParams::for_kind(fixture),
            numerics: Numerics::for_experiment(experiment),
        }
    }

    /// Parses a TOML document, filling missing keys from the defaults of
    /// its experiment (and fixture, when `fixture` is given).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        // A first typed pass reports unknown keys and type errors with the
        // offending key and line.
        let _: PartialConfig = toml::from_str(text).context("invalid experiment config")?;
        let user: toml::Table = toml::from_str(text)?;
        let experiment: Experiment = match user.get("experiment") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => bail!("invalid experiment config: key `experiment` must be a string"),
            None => bail!("invalid experiment config: missing key `experiment`"),
        };
        let mut defaults = Self::defaults(experiment);
        if let Some(toml::Value::String(s)) = user.get("fixture") {
            defaults.fixture = s
                .parse()
                .map_err(|e| anyhow!("invalid experiment config: key `fixture`: {e}"))?;
            defaults.model = FixtureParams::for_kind(defaults.fixture);
        }
        let mut merged = toml::Table::try_from(&defaults)?;
        merge(&mut merged, user);
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .context("invalid experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Checks cross-key constraints, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        let positive = [
            ("numerics.transient_dt", n.transient_dt),
            ("numerics.transient_tol", n.transient_tol),
            ("numerics.horizon", n.horizon),
            ("numerics.mc_dt", n.mc_dt),
            ("numerics.oracle_resolution", n.oracle_resolution),
            ("numerics.x0", n.x0),
        ];
        for (key, value) in positive {
            if value.is_nan() || value <= 0.0 {
                bail!("invalid experiment config: key `{key}` must be positive, got {value}");
            }
        }
        if n.rho_schedule.is_empty() {
            bail!("invalid experiment config: key `numerics.rho_schedule` is empty");
        }
        if n.horizons.iter().any(|t| t.is_nan() || *t <= 0.0) || n.horizons.is_empty() {
            bail!("invalid experiment config: key `numerics.horizons` needs positive entries");
        }
        if self.jobs == 0 {
            bail!("invalid experiment config: key `jobs` must be at least 1");
        }
        Ok(())
    }
}

/// Overlays `user` onto `base`, recursing into tables.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

/// Shape of a config file with every key optional.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct PartialConfig {
    experiment: Option<String>,
    fixture: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    model: Option<FixtureParams>,
    numerics: Option<Numerics>,
}

/// Parses `a,b,c` into a list of reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("`{s}` is not a number"))
        })
        .collect()
}
