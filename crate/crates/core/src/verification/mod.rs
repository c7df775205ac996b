//! Monte Carlo and brute-force adjudication of the solution fields.
//!
//! Every stochastic check reduces to a sample mean with standard error `SE`
//! and a bound of one of three kinds. It passes when
//!
//! ```text
//! equals:    |estimate − bound| ≤ max(3·SE, floor)
//! at_most:   estimate ≤ bound + max(3·SE, floor)
//! at_least:  estimate ≥ bound − max(3·SE, floor)
//! ```
//!
//! where `floor` is zero unless a check states an absolute tolerance; a
//! zero standard error (all paths identical) falls back to `10⁻¹²` and is
//! flagged as degenerate.

mod comparison;
mod martingale;
mod oracle;
mod risk;
mod strategies;

pub use comparison::{comparison_check, default_z_probes, ComparisonReport};
pub use martingale::{martingale_check, MartingaleSetup};
pub use oracle::{
    brute_force_g, max_second_difference, maxmin_point, saddle_gap, MaxminPoint, SaddleGap, PI_CLIP,
};
pub use risk::{risk_sensitive_rate, RiskSensitiveReport, RiskSensitiveSetup, RunningPayoff};
pub use strategies::{GridFeedback, Strategies, DEFAULT_PI_CAP};

use serde::Serialize;

use crate::exec::Backend;

/// Tolerance used in place of `3·SE` when the standard error vanishes.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Equals,
    AtMost,
    AtLeast,
}

/// Result of one stochastic check.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub check: String,
    pub estimate: f64,
    pub std_error: f64,
    pub bound_kind: BoundKind,
    pub bound_value: f64,
    pub passed: bool,
    pub paths: usize,
    pub seed: u64,
    /// Absolute tolerance allowed on top of `3·SE`.
    #[serde(skip_serializing_if = "is_zero")]
    pub floor: f64,
    /// All paths produced the same value.
    #[serde(skip_serializing_if = "is_false")]
    pub degenerate: bool,
    #[serde(skip_serializing_if = "is_zero_usize")]
    pub pi_cap_hits: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero_usize(n: &usize) -> bool {
    *n == 0
}

impl MonteCarloReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check: impl Into<String>,
        estimate: f64,
        std_error: f64,
        bound_kind: BoundKind,
        bound_value: f64,
        floor: f64,
        paths: usize,
        seed: u64,
    ) -> Self {
        let degenerate = std_error == 0.0;
        let mut report = Self {
            check: check.into(),
            estimate,
            std_error,
            bound_kind,
            bound_value,
            passed: false,
            paths,
            seed,
            floor,
            degenerate,
            pi_cap_hits: 0,
            warnings: Vec::new(),
        };
        report.passed = report.evaluate();
        report
    }

    /// The pass/fail verdict under the 3-SE rule.
    pub fn evaluate(&self) -> bool {
        let slack = if self.std_error > 0.0 {
            3.0 * self.std_error
        } else {
            DEGENERATE_TOLERANCE
        }
        .max(self.floor);
        if !self.estimate.is_finite() {
            return false;
        }
        match self.bound_kind {
            BoundKind::Equals => (self.estimate - self.bound_value).abs() <= slack,
            BoundKind::AtMost => self.estimate <= self.bound_value + slack,
            BoundKind::AtLeast => self.estimate >= self.bound_value - slack,
        }
    }

    /// One human-readable line.
    pub fn line(&self) -> String {
        let rel = match self.bound_kind {
            BoundKind::Equals => "=",
            BoundKind::AtMost => "<=",
            BoundKind::AtLeast => ">=",
        };
        format!(
            "[{}] {}: {:.6} ± {:.2e} {} {:.6}",
            if self.passed { "pass" } else { "FAIL" },
            self.check,
            self.estimate,
            self.std_error,
            rel,
            self.bound_value
        )
    }
}

/// Simulation settings shared by the Monte Carlo checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(skip)]
    pub backend: Backend,
}

impl McConfig {
    pub fn new(horizon: f64, dt: f64, paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            dt,
            paths,
            seed,
            backend: Backend::default(),
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub(crate) fn simulation(&self) -> crate::market::SimulationConfig {
        crate::market::SimulationConfig::new(self.horizon, self.dt, self.paths, self.seed)
            .with_backend(self.backend)
    }
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests;
