//! Euler–Maruyama factor paths and log-Euler wealth paths.
//!
//! One step from `t_k` to `t_{k+1}` with simulation-measure increment `ΔW̃`
//! and shift drift `a(V_k)`:
//!
//! ```text
//! V_{k+1} = V_k + η(V_k) Δt + κ (ΔW̃ + a(V_k) Δt)
//! ln X_{k+1} = ln X_k + πᵀ(θ + a) Δt − ½|π|² Δt + πᵀ ΔW̃
//! ```
//!
//! The bracket `ΔW̃ + aΔt` is the increment of the original Brownian motion,
//! so the base simulation with a manually added drift reproduces the shifted
//! one bit for bit. Every path owns the noise stream `(seed, path)`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::model::FactorModel;
use super::shift::{Feedback, MeasureShift};
use crate::error::{check_dim, Error, Result};
use crate::exec::Backend;
use crate::rng::PathNoise;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Store every `record_every`-th time step (the terminal time is always stored).
    pub record_every: usize,
    #[serde(skip)]
    pub backend: Backend,
}

impl SimulationConfig {
    pub fn new(horizon: f64, dt: f64, paths: usize, seed: u64) -> Self {
        Self {
            horizon,
            dt,
            paths,
            seed,
            record_every: 1,
            backend: Backend::default(),
        }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    /// Number of Euler steps; `Δt` is adjusted to `horizon / steps`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !(self.dt > 0.0) || self.dt > self.horizon / 10.0 + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt ≤ T/10, got dt = {}, T = {}",
                self.dt, self.horizon
            )));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter(
                "at least one path is required".into(),
            ));
        }
        Ok(())
    }

    fn recorded_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut ks: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if *ks.last().unwrap() != n {
            ks.push(n);
        }
        ks
    }
}

/// Simulated factor (and optionally wealth) paths on a common time grid.
#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    /// Row-major `[path][time][coordinate]`.
    pub factor: Vec<f64>,
    /// Row-major `[path][time]`.
    pub wealth: Option<Vec<f64>>,
    pub dim: usize,
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub initial: Vec<f64>,
    pub config: SimulationConfig,
    pub shift: &'static str,
}

impl PathEnsemble {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn factor_at(&self, path: usize, k: usize) -> &[f64] {
        let off = (path * self.n_times() + k) * self.dim;
        &self.factor[off..off + self.dim]
    }

    pub fn wealth_at(&self, path: usize, k: usize) -> Option<f64> {
        self.wealth.as_ref().map(|w| w[path * self.n_times() + k])
    }

    /// CSV with header `path,t,v_1..v_d,x` (`x` empty when no wealth was simulated).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["path".to_string(), "t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("v_{i}")));
        header.push("x".into());
        w.write_record(&header)?;
        for p in 0..self.paths {
            for (k, t) in self.times.iter().enumerate() {
                let mut rec = vec![p.to_string(), t.to_string()];
                rec.extend(self.factor_at(p, k).iter().map(|v| v.to_string()));
                rec.push(
                    self.wealth_at(p, k)
                        .map(|x| x.to_string())
                        .unwrap_or_default(),
                );
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `out = v + η(v)Δt + κ·dw`, where `dw` is the increment of the original
/// Brownian motion.
#[inline]
pub fn step_factor(model: &FactorModel, v: &[f64], dw: &[f64], dt: f64, out: &mut [f64]) {
    model.eta(v, out);
    let kappa = model.kappa();
    for (i, o) in out.iter_mut().enumerate() {
        let diffusion: f64 = kappa.row(i).iter().zip(dw).map(|(k, w)| k * w).sum();
        *o = v[i] + *o * dt + diffusion;
    }
}

/// State handed to path visitors at each grid time.
pub struct StepView<'a> {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub v: &'a [f64],
    /// Portfolio at `v` (empty when no portfolio is simulated).
    pub pi: &'a [f64],
    /// θ(v) (empty when no portfolio is simulated).
    pub theta: &'a [f64],
    /// Shift drift at `v`.
    pub drift: &'a [f64],
    pub log_wealth: f64,
}

/// Runs every path and folds it with `visit`, which sees the state at each
/// left endpoint `t_0..t_{N−1}` and finally at `t_N`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_paths_with<S, T, I, V, F>(
    model: &FactorModel,
    shift: &MeasureShift,
    pi: Option<&dyn Feedback>,
    cfg: &SimulationConfig,
    v0: &[f64],
    init: I,
    visit: V,
    finish: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn(usize) -> S + Sync + Send,
    V: Fn(&mut S, &StepView) + Sync + Send,
    F: Fn(S, &StepView) -> T + Sync + Send,
{
    cfg.validate()?;
    let d = model.dim_factor();
    check_dim(d, v0.len())?;
    for dim in shift.dims() {
        check_dim(d, dim)?;
    }
    if let Some(p) = pi {
        check_dim(d, p.dim())?;
    }
    let n = cfg.steps();
    let dt = cfg.step_size();
    let sqrt_dt = dt.sqrt();
    // The game drift reuses the wealth portfolio when both are the same map.
    let shared = pi.is_some_and(|p| shift.shares_portfolio(p));
    cfg.backend.try_map(cfg.paths, |path| {
        let mut noise = PathNoise::new(cfg.seed, path);
        let mut v = v0.to_vec();
        let mut next = vec![0.0; d];
        let mut dw = vec![0.0; d];
        let mut drift = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        let mut p = if pi.is_some() { vec![0.0; d] } else { vec![] };
        let mut th = if pi.is_some() { vec![0.0; d] } else { vec![] };
        let mut log_x = 0.0;
        let mut state = init(path);
        for k in 0..=n {
            if let Some(pf) = pi {
                pf.eval(&v, &mut p);
                model.theta(&v, &mut th);
            }
            if shared {
                shift.game_drift_with(&v, &p, &mut drift);
            } else {
                shift.drift(&v, &mut drift, &mut scratch);
            }
            let view = StepView {
                step: k,
                t: k as f64 * dt,
                dt,
                v: &v,
                pi: &p,
                theta: &th,
                drift: &drift,
                log_wealth: log_x,
            };
            if k == n {
                return Ok(finish(state, &view));
            }
            visit(&mut state, &view);
            noise.increments(sqrt_dt, &mut dw);
            if pi.is_some() {
                let mut incr = 0.0;
                for i in 0..d {
                    incr += p[i] * ((th[i] + drift[i]) * dt + dw[i]) - 0.5 * p[i] * p[i] * dt;
                }
                log_x += incr;
            }
            for i in 0..d {
                dw[i] += drift[i] * dt;
            }
            step_factor(model, &v, &dw, dt, &mut next);
            if !next.iter().all(|x| x.is_finite()) || !log_x.is_finite() {
                return Err(Error::Divergence { path, step: k + 1 });
            }
            std::mem::swap(&mut v, &mut next);
        }
        unreachable!()
    })
}

struct Recorder {
    factor: Vec<f64>,
    log_wealth: Vec<f64>,
    next: usize,
}

fn simulate_recorded(
    model: &FactorModel,
    shift: &MeasureShift,
    pi: Option<&dyn Feedback>,
    cfg: &SimulationConfig,
    v0: &[f64],
) -> Result<(Vec<usize>, Vec<Recorder>)> {
    let ks = cfg.recorded_steps();
    let record = |r: &mut Recorder, s: &StepView| {
        if r.next < ks.len() && ks[r.next] == s.step {
            r.factor.extend_from_slice(s.v);
            r.log_wealth.push(s.log_wealth);
            r.next += 1;
        }
    };
    let recs = simulate_paths_with(
        model,
        shift,
        pi,
        cfg,
        v0,
        |_| Recorder {
            factor: Vec::new(),
            log_wealth: Vec::new(),
            next: 0,
        },
        record,
        |mut r, s| {
            record(&mut r, s);
            r
        },
    )?;
    Ok((ks, recs))
}

/// Factor paths under the given measure.
pub fn simulate_factor(
    model: &FactorModel,
    shift: &MeasureShift,
    cfg: &SimulationConfig,
    v0: &[f64],
) -> Result<PathEnsemble> {
    let (ks, recs) = simulate_recorded(model, shift, None, cfg, v0)?;
    let dt = cfg.step_size();
    Ok(PathEnsemble {
        times: ks.iter().map(|k| *k as f64 * dt).collect(),
        factor: recs.into_iter().flat_map(|r| r.factor).collect(),
        wealth: None,
        dim: model.dim_factor(),
        paths: cfg.paths,
        seed: cfg.seed,
        dt,
        initial: v0.to_vec(),
        config: *cfg,
        shift: shift.label(),
    })
}

/// Adds wealth paths for the portfolio `pi` to an ensemble, regenerating the
/// noise from the ensemble's streams. The ensemble must have been simulated
/// under `shift`; a mismatch in the regenerated factor is reported.
pub fn simulate_wealth(
    ensemble: &PathEnsemble,
    model: &FactorModel,
    pi: &dyn Feedback,
    shift: &MeasureShift,
    x0: f64,
) -> Result<PathEnsemble> {
    if !(x0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "initial wealth must be positive, got {x0}"
        )));
    }
    let (_, recs) = simulate_recorded(model, shift, Some(pi), &ensemble.config, &ensemble.initial)?;
    let mut factor = Vec::with_capacity(ensemble.factor.len());
    let mut wealth = Vec::with_capacity(ensemble.paths * ensemble.n_times());
    for r in recs {
        factor.extend_from_slice(&r.factor);
        wealth.extend(r.log_wealth.iter().map(|l| x0 * l.exp()));
    }
    if factor != ensemble.factor {
        return Err(Error::InvalidParameter(
            "ensemble was not produced under the given measure shift".into(),
        ));
    }
    Ok(PathEnsemble {
        wealth: Some(wealth),
        ..ensemble.clone()
    })
}
