//! Outer optimization over the scenario set for drivers without a closed form.
//!
//! The reduced objective `φ(u) = sup_π F(v, z, π, u)` is convex and
//! `L`-smooth (its gradient is `∂F/∂u` at the inner maximizer), so projected
//! gradient descent with Armijo backtracking converges. Sets of dimension at
//! most two fall back to an exhaustive grid when descent stalls.

use crate::error::{Error, Result};
use crate::sets::{ConvexSet, Point};

pub(crate) const MAX_ITERATIONS: usize = 500;
pub(crate) const TOLERANCE: f64 = 1e-9;

/// Minimizes a convex smooth `f` over `set`; `f` returns the value and writes the gradient.
pub(crate) fn minimize<F>(set: &ConvexSet, start: &[f64], lipschitz: f64, f: F) -> Result<Point>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    match descend(set, start, lipschitz, &f) {
        Ok(u) => Ok(u),
        Err(err) if set.dim() <= 2 && set.is_bounded() => {
            let (lo, hi) = set.bounding_box(0.0);
            let diam = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            let res = if diam > 0.0 { diam * 1e-3 } else { 1.0 };
            let mut grad = vec![0.0; set.dim()];
            let mut best: Option<(f64, Point)> = None;
            for p in set.grid(res, 0.0)? {
                let val = f(&p, &mut grad);
                if best.as_ref().is_none_or(|(b, _)| val < *b) {
                    best = Some((val, p));
                }
            }
            let (_, p) = best.ok_or(err)?;
            // Polish the grid winner; keep it if descent still stalls.
            Ok(descend(set, &p, lipschitz, &f).unwrap_or(p))
        }
        Err(err) => Err(err),
    }
}

fn descend<F>(set: &ConvexSet, start: &[f64], lipschitz: f64, f: &F) -> Result<Point>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let d = set.dim();
    let mut u = set.project(start)?;
    let mut grad = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut value = f(&u, &mut grad);
    let mut history = Vec::new();
    let base_step = 1.0 / lipschitz.max(1e-12);
    for _ in 0..MAX_ITERATIONS {
        let mut step = base_step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let next = set.project_unchecked(&trial);
            let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
            let lin: f64 = diff.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let sq: f64 = diff.iter().map(|x| x * x).sum();
            let nv = f(&next, &mut scratch);
            if nv <= value + lin + sq / (2.0 * step) + 1e-15 * value.abs().max(1.0) {
                accepted = Some((next, nv, sq.sqrt() / step));
                break;
            }
            step *= 0.5;
        }
        let Some((next, nv, mapping)) = accepted else {
            break;
        };
        history.push(mapping);
        if mapping <= TOLERANCE {
            return Ok(next);
        }
        u = next;
        value = f(&u, &mut grad);
        debug_assert!(value <= nv + 1e-12);
    }
    Err(Error::NonConvergence {
        solver: "projected gradient",
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
