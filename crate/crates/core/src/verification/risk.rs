//! Risk-sensitive growth rate of a feedback pair.
//!
//! Under the game measure `ℙ^{π,u}` (Brownian drift `δπ + u`) the rate is
//!
//! ```text
//! (1/T)·ln E[exp ∫₀ᵀ L(V_s, π_s, u_s) ds],
//! L(v, π, u) = −½δ(1−δ)|π|² + δπᵀ(θ(v) + u),
//! ```
//!
//! estimated by a log-sum-exp sample mean with a delta-method standard
//! error. The integral uses left-point sums on the simulation grid.

use serde::Serialize;

use super::{BoundKind, McConfig, MonteCarloReport};
use crate::error::{Error, Result};
use crate::market::{simulate_paths_with, FactorModel, MeasureShift, SharedFeedback};

/// Effective sample sizes below this trigger a variance warning.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 100.0;

/// `L(v, π, u) = −½δ(1−δ)|π|² + δπᵀ(θ(v) + u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningPayoff {
    pub delta: f64,
}

impl RunningPayoff {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power exponent must lie in (0,1), got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn value(&self, theta: &[f64], pi: &[f64], u: &[f64]) -> f64 {
        let d = self.delta;
        let mut sq = 0.0;
        let mut cross = 0.0;
        for i in 0..pi.len() {
            sq += pi[i] * pi[i];
            cross += pi[i] * (theta[i] + u[i]);
        }
        -0.5 * d * (1.0 - d) * sq + d * cross
    }

    /// `L` recovered from the game drift `δπ + u`.
    #[inline]
    pub(crate) fn at_game_drift(&self, theta: &[f64], pi: &[f64], drift: &[f64]) -> f64 {
        let d = self.delta;
        let mut acc = 0.0;
        for i in 0..pi.len() {
            let u = drift[i] - d * pi[i];
            acc += -0.5 * d * (1.0 - d) * pi[i] * pi[i] + d * pi[i] * (theta[i] + u);
        }
        acc
    }

    /// `L` at factor state `v` of `model`.
    pub fn at(&self, model: &FactorModel, v: &[f64], pi: &[f64], u: &[f64]) -> f64 {
        let mut theta = vec![0.0; model.dim_factor()];
        model.theta(v, &mut theta);
        self.value(&theta, pi, u)
    }
}

#[derive(Clone, Copy)]
pub struct RiskSensitiveSetup<'a> {
    pub model: &'a FactorModel,
    pub payoff: RunningPayoff,
    pub v0: &'a [f64],
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub horizon: f64,
    pub rate: f64,
    pub std_error: f64,
    pub effective_samples: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskSensitiveReport {
    /// Verdict at the full horizon.
    pub report: MonteCarloReport,
    /// Rate at each checkpoint, ending with the full horizon.
    pub trajectory: Vec<RatePoint>,
}

/// Estimates the rate for the feedback pair `(pi, u)` and compares the
/// full-horizon value with `bound` under the 3-SE rule widened by `floor`.
#[allow(clippy::too_many_arguments)]
pub fn risk_sensitive_rate(
    setup: RiskSensitiveSetup<'_>,
    name: &str,
    pi: SharedFeedback,
    u: SharedFeedback,
    cfg: &McConfig,
    checkpoints: &[f64],
    bound: (BoundKind, f64),
    floor: f64,
) -> Result<RiskSensitiveReport> {
    let delta = setup.payoff.delta;
    let sim = cfg.simulation();
    let dt = sim.step_size();
    let steps = sim.steps();
    let mut marks: Vec<usize> = checkpoints
        .iter()
        .filter(|t| **t > 0.0 && **t < cfg.horizon)
        .map(|t| ((t / dt).round() as usize).clamp(1, steps))
        .collect();
    marks.push(steps);
    marks.dedup();
    let shift = MeasureShift::Game {
        delta,
        pi: pi.clone(),
        u,
    };
    let payoff = setup.payoff;
    let integrals = simulate_paths_with(
        setup.model,
        &shift,
        Some(pi.as_ref()),
        &sim,
        setup.v0,
        |_| (0.0, Vec::with_capacity(marks.len())),
        |(acc, out): &mut (f64, Vec<f64>), s| {
            if marks.contains(&s.step) {
                out.push(*acc);
            }
            *acc += payoff.at_game_drift(s.theta, s.pi, s.drift) * s.dt;
        },
        |(acc, mut out), _| {
            out.push(acc);
            out
        },
    )?;
    let mut trajectory = Vec::with_capacity(marks.len());
    for (c, &m) in marks.iter().enumerate() {
        let t = m as f64 * dt;
        let xs: Vec<f64> = integrals.iter().map(|v| v[c]).collect();
        let (log_mean, se, ess) = log_mean_exp(&xs);
        trajectory.push(RatePoint {
            horizon: t,
            rate: log_mean / t,
            std_error: se / t,
            effective_samples: ess,
        });
    }
    let last = trajectory.last().expect("at least the final horizon");
    let mut report = MonteCarloReport::new(
        name,
        last.rate,
        last.std_error,
        bound.0,
        bound.1,
        floor,
        cfg.paths,
        cfg.seed,
    );
    if report.degenerate {
        report
            .warnings
            .push("all paths produced the same payoff integral".into());
    }
    if last.effective_samples < MIN_EFFECTIVE_SAMPLES {
        report.warnings.push(format!(
            "effective sample size {:.1} below {MIN_EFFECTIVE_SAMPLES}: exponential weights have collapsed",
            last.effective_samples
        ));
    }
    Ok(RiskSensitiveReport { report, trajectory })
}

/// `ln mean exp(x)`, its delta-method standard error and the effective
/// sample size of the weights `exp(x)`.
pub(crate) fn log_mean_exp(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let sum: f64 = w.iter().sum();
    let mean = sum / n;
    let var = if xs.len() > 1 {
        w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let se = (var / n).sqrt() / mean;
    let ess = sum * sum / w.iter().map(|x| x * x).sum::<f64>();
    (m + mean.ln(), se, ess)
}
