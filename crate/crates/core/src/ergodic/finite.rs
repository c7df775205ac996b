//! Finite-horizon problem and its long-horizon link to the ergodic solution.
//!
//! The finite-horizon value solves the backward parabolic equation
//!
//! ```text
//! ∂_t f + ½Tr(κκᵀ∇²f) + ηᵀ∇f + G(v, κᵀ∇f) = 0,   f(·, T) = 0,
//! ```
//!
//! and, as `T → ∞`, `f_T(v, 0) − λT − y(v)` tends to a constant `L`
//! independent of `v`. The equation is autonomous, so `f(·, T − s)` is the
//! solution of the forward march `∂_s g = Lg + G` started from the terminal
//! data; one march serves every horizon.

use std::io::Write;

use serde::Serialize;

use super::discretization::{Discretization, PdeProblem};
use super::field::{extract_z, require_positive_wealth, GradientField, MarkovianSolutionField};
use super::grid::SpatialGrid;
use super::solve::{solve_discounted_on, ImexStepper};
use crate::drivers::DriverSpec;
use crate::error::{Error, Result};
use crate::market::PathEnsemble;

/// Default number of time steps per horizon.
pub const DEFAULT_STEPS: usize = 2000;
/// Upper limit on stored time slices.
const MAX_SLICES: usize = 2001;

/// Backward solution `f(v, t)` on `[0, T]` with zero (or supplied) terminal data.
#[derive(Debug, Clone)]
pub struct FiniteHorizonField {
    pub horizon: f64,
    pub dt: f64,
    pub grid: SpatialGrid,
    /// Increasing times at which `f` is stored; the first is 0, the last `T`.
    pub times: Vec<f64>,
    /// `slices[i]` is `f(·, times[i])`.
    pub slices: Vec<Vec<f64>>,
    /// `κᵀ∇f(·, 0)`.
    pub z0: GradientField,
}

impl FiniteHorizonField {
    /// `f(·, 0)`, the initial value of the backward equation on the grid.
    pub fn initial(&self) -> &[f64] {
        &self.slices[0]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.slices[self.slices.len() - 1]
    }

    /// `f(v, t)` by interpolation in space and linearly in time.
    pub fn value_at(&self, v: &[f64], t: f64) -> (f64, bool) {
        let t = t.clamp(0.0, self.horizon);
        let i = match self.times.iter().position(|s| *s >= t) {
            Some(0) | None => 0,
            Some(i) => i - 1,
        };
        let j = (i + 1).min(self.times.len() - 1);
        let (a, oa) = self.grid.interpolate(&self.slices[i], v);
        if i == j {
            return (a, oa);
        }
        let (b, ob) = self.grid.interpolate(&self.slices[j], v);
        let w = ((t - self.times[i]) / (self.times[j] - self.times[i])).clamp(0.0, 1.0);
        ((1.0 - w) * a + w * b, oa || ob)
    }
}

/// Solves the backward equation on `[0, T]` with `f(·, T) = 0`.
pub fn solve_finite_horizon(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    horizon: f64,
    dt: f64,
) -> Result<FiniteHorizonField> {
    solve_finite_horizon_with_terminal(problem, grid, horizon, dt, &vec![0.0; grid.len()])
}

/// Backward solve with terminal data `f(·, T) = terminal`.
pub fn solve_finite_horizon_with_terminal(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    horizon: f64,
    dt: f64,
    terminal: &[f64],
) -> Result<FiniteHorizonField> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if terminal.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: terminal.len(),
        });
    }
    let steps = step_count(horizon, dt)?;
    let dt = horizon / steps as f64;
    let disc = Discretization::new(problem.model, grid)?;
    let stepper = ImexStepper::new(&disc, dt)?;
    let every = steps.div_ceil(MAX_SLICES - 1);
    // Marching in time-to-maturity s = T − t.
    let mut f = terminal.to_vec();
    let mut slices = vec![f.clone()];
    let mut times = vec![horizon];
    for n in 1..=steps {
        f = stepper.step(problem.generator, &f)?;
        if n % every == 0 || n == steps {
            slices.push(f.clone());
            times.push(if n == steps {
                0.0
            } else {
                horizon - n as f64 * dt
            });
        }
    }
    slices.reverse();
    times.reverse();
    let z0 = extract_z(grid, &slices[0], &disc.kappa);
    Ok(FiniteHorizonField {
        horizon,
        dt,
        grid: grid.clone(),
        times,
        slices,
        z0,
    })
}

/// Lower value `w_T(x, v) = (x^δ/δ)·exp(f(v, 0))` for power utility.
pub fn lower_value(delta: f64, x: f64, v: &[f64], field: &FiniteHorizonField) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "power exponent must lie in (0,1), got {delta}"
        )));
    }
    require_positive_wealth(x)?;
    let (f0, _) = field.grid.interpolate(field.initial(), v);
    Ok(x.powf(delta) / delta * f0.exp())
}

/// One row of the long-horizon convergence table.
#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub horizon: f64,
    /// `L̂(T, v₀)`.
    pub l_hat: f64,
    pub l_hat_min: f64,
    pub l_hat_max: f64,
    /// `max_v L̂(T, v) − min_v L̂(T, v)`.
    pub spread: f64,
    /// `max_v |L̂(T, v) − L̂(T', v)|` against the previous horizon `T'`.
    pub cauchy_diff: Option<f64>,
    /// `f_T(v₀, 0)`.
    pub value_at_v0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicLimitReport {
    pub rows: Vec<LimitRow>,
    /// `L̂` at the longest horizon and `v₀`.
    pub l_estimate: f64,
    pub lambda: f64,
    pub dt: f64,
    #[serde(skip)]
    pub l_hat_fields: Vec<Vec<f64>>,
}

impl ErgodicLimitReport {
    /// CSV with columns `T,l_hat,spread,cauchy_diff`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "l_hat", "spread", "cauchy_diff"])?;
        for r in &self.rows {
            w.write_record([
                r.horizon.to_string(),
                r.l_hat.to_string(),
                r.spread.to_string(),
                r.cauchy_diff.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Largest `|L̂(T, ·) − L̂(T', ·)|` between the last two horizons.
    pub fn last_cauchy_diff(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.cauchy_diff)
    }
}

/// `L̂(T, v) = f_T(v, 0) − λT − y(v)` for each horizon, from one march with
/// step `max(T)/DEFAULT_STEPS` (or `dt` when given). Reported horizons are
/// the step multiples actually reached.
pub fn ergodic_limit(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    ergodic: &MarkovianSolutionField,
    horizons: &[f64],
    dt: Option<f64>,
) -> Result<ErgodicLimitReport> {
    if ergodic.grid != *grid {
        return Err(Error::InvalidParameter(
            "ergodic field lives on a different grid".into(),
        ));
    }
    if horizons.is_empty()
        || horizons.iter().any(|t| !(*t > 0.0))
        || horizons.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(format!(
            "horizons must be positive and increasing: {horizons:?}"
        )));
    }
    let t_max = horizons[horizons.len() - 1];
    let total = step_count(t_max, dt.unwrap_or(t_max / DEFAULT_STEPS as f64))?;
    let dt = t_max / total as f64;
    // Horizons that are not multiples of the step are rounded to the nearest one.
    let marks: Vec<usize> = horizons
        .iter()
        .map(|t| ((t / dt).round() as usize).max(1))
        .collect();
    if marks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "horizons {horizons:?} are closer than the step {dt}"
        )));
    }
    let disc = Discretization::new(problem.model, grid)?;
    let stepper = ImexStepper::new(&disc, dt)?;
    let k0 = grid.nearest(&ergodic.v0);
    let mut f = vec![0.0; disc.n];
    let mut rows: Vec<LimitRow> = Vec::new();
    let mut fields: Vec<Vec<f64>> = Vec::new();
    let mut next = 0;
    for n in 1..=total {
        f = stepper.step(problem.generator, &f)?;
        if n == marks[next] {
            let t = n as f64 * dt;
            let l: Vec<f64> = f
                .iter()
                .zip(&ergodic.y)
                .map(|(fv, y)| fv - ergodic.lambda * t - y)
                .collect();
            let (lo, hi) = l
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                    (a.min(*x), b.max(*x))
                });
            let (at_v0, _) = grid.interpolate(&l, &ergodic.v0);
            let cauchy_diff = fields.last().map(|prev| {
                prev.iter()
                    .zip(&l)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            });
            rows.push(LimitRow {
                horizon: t,
                l_hat: at_v0,
                l_hat_min: lo,
                l_hat_max: hi,
                spread: hi - lo,
                cauchy_diff,
                value_at_v0: f[k0],
            });
            fields.push(l);
            next += 1;
        }
    }
    let l_estimate = rows.last().map(|r| r.l_hat).unwrap_or(f64::NAN);
    Ok(ErgodicLimitReport {
        rows,
        l_estimate,
        lambda: ergodic.lambda,
        dt,
        l_hat_fields: fields,
    })
}

fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    Ok(((horizon / dt).round() as usize).max(1))
}

/// Per-`ρ` row of the discounted forward diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DiscountedForwardRow {
    pub rho: f64,
    /// `max |U^ρ e^{−y^ρ(v₀)}/U − 1|` over paths and recorded times.
    pub ratio_max_error: f64,
    /// Monte Carlo mean of `∫₀ᵗ |α^{*,ρ} − α^*|² ds` at the ensemble horizon.
    pub strategy_gap: f64,
    pub strategy_gap_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscountedForwardReport {
    pub rows: Vec<DiscountedForwardRow>,
    pub horizon: f64,
    pub paths: usize,
    /// Whether both diagnostics decrease along the schedule.
    pub ratio_decreasing: bool,
    pub gap_decreasing: bool,
}

/// Compares the discounted forward processes
///
/// ```text
/// U^ρ(x, t) = (x^δ/δ)·exp(y^ρ(V_t) − ∫₀ᵗ ρ y^ρ(V_s) ds)
/// ```
///
/// with the ergodic one along the simulated factor paths, and measures the
/// strategy gap `∫|α*(V, z^ρ, u) − α*(V, z, u)|²` with `u = u*(V, z)`.
/// Path integrals use the trapezoidal rule on the ensemble's time grid.
pub fn discounted_forward_diagnostics(
    problem: PdeProblem<'_>,
    spec: &DriverSpec,
    grid: &SpatialGrid,
    rho_schedule: &[f64],
    ergodic: &MarkovianSolutionField,
    ensemble: &PathEnsemble,
) -> Result<DiscountedForwardReport> {
    if rho_schedule.is_empty() {
        return Err(Error::InvalidParameter("empty discount schedule".into()));
    }
    let disc = Discretization::new(problem.model, grid)?;
    let nt = ensemble.n_times();
    let times = &ensemble.times;
    // Ergodic quantities along the paths do not depend on ρ.
    let mut base = Vec::with_capacity(ensemble.paths);
    for p in 0..ensemble.paths {
        let mut rows = Vec::with_capacity(nt);
        for k in 0..nt {
            let v = ensemble.factor_at(p, k);
            let (y, _) = ergodic.y_at(v);
            let (z, _) = ergodic.z_at(v);
            let u = spec.u_star(v, &z)?;
            let alpha = spec.alpha_star(v, &z, &u)?;
            rows.push((y, u, alpha));
        }
        base.push(rows);
    }
    let mut rows = Vec::new();
    let mut start: Option<Vec<f64>> = None;
    for &rho in rho_schedule {
        let sol = solve_discounted_on(&disc, problem.generator, rho, start.take())?;
        let (y_rho_v0, _) = sol.y_at(&ergodic.v0);
        let mut ratio_max: f64 = 0.0;
        let mut gaps = Vec::with_capacity(ensemble.paths);
        for (p, path) in base.iter().enumerate() {
            let mut integral = 0.0;
            let mut gap = 0.0;
            let mut prev: Option<(f64, f64)> = None;
            for k in 0..nt {
                let v = ensemble.factor_at(p, k);
                let (y_rho, _) = sol.y_at(v);
                let (z_rho, _) = sol.z_at(v);
                let (y, u, alpha) = &path[k];
                let alpha_rho = spec.alpha_star(v, &z_rho, u)?;
                let sq: f64 = alpha_rho
                    .iter()
                    .zip(alpha.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if let Some((py, psq)) = prev {
                    let h = times[k] - times[k - 1];
                    integral += 0.5 * h * rho * (py + y_rho);
                    gap += 0.5 * h * (psq + sq);
                }
                prev = Some((y_rho, sq));
                let log_ratio = y_rho - y_rho_v0 - integral - y + ergodic.lambda * times[k];
                ratio_max = ratio_max.max((log_ratio.exp() - 1.0).abs());
            }
            gaps.push(gap);
        }
        let m = gaps.len() as f64;
        let mean = gaps.iter().sum::<f64>() / m;
        let var = if gaps.len() > 1 {
            gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        rows.push(DiscountedForwardRow {
            rho,
            ratio_max_error: ratio_max,
            strategy_gap: mean,
            strategy_gap_se: (var / m).sqrt(),
        });
        start = Some(sol.y);
    }
    let decreasing =
        |f: fn(&DiscountedForwardRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]) + 1e-12);
    let ratio_decreasing = decreasing(|r| r.ratio_max_error);
    let gap_decreasing = decreasing(|r| r.strategy_gap);
    Ok(DiscountedForwardReport {
        horizon: times.last().copied().unwrap_or(0.0),
        paths: ensemble.paths,
        rows,
        ratio_decreasing,
        gap_decreasing,
    })
}
