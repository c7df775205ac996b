//! Markovian feedback maps and the measure changes they induce.
//!
//! Under the scenario measure `ℙ^u` the process `W^u = W − ∫u dt` is a
//! Brownian motion, so simulating the factor under `ℙ^u` amounts to adding
//! `κu` to its drift. The game measure of the risk-sensitive criterion adds
//! `κ(δπ + u)` instead. Densities are never used as path weights.

use std::fmt;
use std::sync::Arc;

/// A Markovian feedback map `v ↦ a(v) ∈ ℝ^m`.
pub trait Feedback: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, v: &[f64], out: &mut [f64]);
}

/// Constant control.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFeedback(pub Vec<f64>);

impl Feedback for ConstantFeedback {
    fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    fn eval(&self, _v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// Feedback from a closure.
pub struct FnFeedback<F> {
    dim: usize,
    f: F,
}

impl<F> FnFeedback<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Feedback for FnFeedback<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, v: &[f64], out: &mut [f64]) {
        (self.f)(v, out)
    }
}

pub type SharedFeedback = Arc<dyn Feedback>;

/// Drift added to the Brownian motion driving the factor and the stocks.
#[derive(Clone)]
pub enum MeasureShift {
    Base,
    /// `ℙ^u`: drift `u(V)`.
    Scenario(SharedFeedback),
    /// `ℙ^{π,u}`: drift `δπ(V) + u(V)`.
    Game {
        delta: f64,
        pi: SharedFeedback,
        u: SharedFeedback,
    },
}

impl MeasureShift {
    pub fn scenario<F: Feedback + 'static>(u: F) -> Self {
        MeasureShift::Scenario(Arc::new(u))
    }

    pub fn game<P: Feedback + 'static, U: Feedback + 'static>(delta: f64, pi: P, u: U) -> Self {
        MeasureShift::Game {
            delta,
            pi: Arc::new(pi),
            u: Arc::new(u),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MeasureShift::Base => "base",
            MeasureShift::Scenario(_) => "scenario",
            MeasureShift::Game { .. } => "game",
        }
    }

    /// Writes the drift at `v` into `out`; `scratch` must have length `out.len()`.
    #[inline]
    pub fn drift(&self, v: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        match self {
            MeasureShift::Base => out.iter_mut().for_each(|o| *o = 0.0),
            MeasureShift::Scenario(u) => u.eval(v, out),
            MeasureShift::Game { delta, pi, u } => {
                pi.eval(v, scratch);
                u.eval(v, out);
                for (o, p) in out.iter_mut().zip(scratch.iter()) {
                    *o += delta * p;
                }
            }
        }
    }

    /// Game drift when the portfolio at `v` is already known.
    #[inline]
    pub(crate) fn game_drift_with(&self, v: &[f64], pi_at_v: &[f64], out: &mut [f64]) {
        if let MeasureShift::Game { delta, u, .. } = self {
            u.eval(v, out);
            for (o, p) in out.iter_mut().zip(pi_at_v) {
                *o += delta * p;
            }
        }
    }

    /// Whether this is a game shift whose portfolio is `pi` itself.
    pub(crate) fn shares_portfolio(&self, pi: &dyn Feedback) -> bool {
        match self {
            MeasureShift::Game { pi: own, .. } => {
                std::ptr::addr_eq(Arc::as_ptr(own), pi as *const dyn Feedback)
            }
            _ => false,
        }
    }

    pub(crate) fn dims(&self) -> Vec<usize> {
        match self {
            MeasureShift::Base => vec![],
            MeasureShift::Scenario(u) => vec![u.dim()],
            MeasureShift::Game { pi, u, .. } => vec![pi.dim(), u.dim()],
        }
    }
}

impl fmt::Debug for MeasureShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeasureShift::{}", self.label())
    }
}
