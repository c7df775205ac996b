//! Self-generation checks for power utility.
//!
//! Under the scenario measure `ℙ^u` the candidate
//! `U(x, t) = (x^δ/δ)·exp(y(v) − λt)` satisfies
//!
//! ```text
//! E_u[U(X_T, T)] / U(x₀, 0) = E_u[(X_T/x₀)^δ · exp(y(V_T) − λT − y(V₀))],
//! ```
//!
//! which is 1 at the saddle pair, at most 1 when nature replies optimally
//! to any portfolio, and at least 1 when the investor replies optimally to
//! any scenario.

use super::{mean_and_se, BoundKind, McConfig, MonteCarloReport};
use crate::drivers::UtilityClass;
use crate::ergodic::MarkovianSolutionField;
use crate::error::{Error, Result};
use crate::market::{simulate_paths_with, FactorModel, Feedback, MeasureShift, SharedFeedback};

/// Market, utility and candidate field of a martingale check.
#[derive(Clone, Copy)]
pub struct MartingaleSetup<'a> {
    pub model: &'a FactorModel,
    pub utility: UtilityClass,
    pub field: &'a MarkovianSolutionField,
    pub x0: f64,
}

/// Monte Carlo estimate of `E_u[U(X_T, T)]/U(x₀, 0)` for the feedback pair
/// `(pi, u)`, compared with 1 according to `expectation`.
pub fn martingale_check(
    setup: MartingaleSetup<'_>,
    name: &str,
    pi: &dyn Feedback,
    u: SharedFeedback,
    expectation: BoundKind,
    cfg: &McConfig,
) -> Result<MonteCarloReport> {
    let delta = match setup.utility {
        UtilityClass::Power { delta } => delta,
        other => {
            return Err(Error::Unsupported(format!(
                "martingale check for {other} utility"
            )))
        }
    };
    if !(setup.x0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "initial wealth must be positive, got {}",
            setup.x0
        )));
    }
    let field = setup.field;
    let lambda = field.lambda;
    let (y0, _) = field.y_at(&field.v0);
    let shift = MeasureShift::Scenario(u);
    let ratios = simulate_paths_with(
        setup.model,
        &shift,
        Some(pi),
        &cfg.simulation(),
        &field.v0,
        |_| false,
        |outside, s| *outside |= !field.grid.contains(s.v),
        |outside, s| {
            let (y, o) = field.y_at(s.v);
            (
                (delta * s.log_wealth + y - lambda * s.t - y0).exp(),
                outside || o,
            )
        },
    )?;
    let values: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let escaped = ratios.iter().filter(|r| r.1).count();
    let (mean, se) = mean_and_se(&values);
    let mut report =
        MonteCarloReport::new(name, mean, se, expectation, 1.0, 0.0, cfg.paths, cfg.seed);
    if report.degenerate {
        report
            .warnings
            .push("all paths produced the same ratio".into());
    }
    if escaped > 0 {
        report.warnings.push(format!(
            "{escaped} paths left the grid; y was clamped there"
        ));
    }
    Ok(report)
}
