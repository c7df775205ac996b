//! Comparison of ergodic constants for ordered generators.

use serde::Serialize;

use crate::drivers::Generator;
use crate::ergodic::{solve_ergodic_false_transient, PdeProblem, SpatialGrid};
use crate::error::{Error, Result};
use crate::market::FactorModel;
use crate::sets::Point;

/// Slack allowed in the verdict `λ₁ ≥ λ₂ − 10⁻⁴`.
pub const COMPARISON_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Smallest `G₁ − G₂` seen on the probe set.
    pub min_gap: f64,
    pub passed: bool,
}

/// Probe values of `z`: a uniform lattice on `[−r, r]^d` with `m` points per axis (d ≤ 2).
pub fn default_z_probes(dim: usize, radius: f64, m: usize) -> Vec<Point> {
    let axis: Vec<f64> = (0..m)
        .map(|i| -radius + 2.0 * radius * i as f64 / (m - 1) as f64)
        .collect();
    match dim {
        1 => axis.iter().map(|a| Point::from_slice(&[*a])).collect(),
        _ => {
            let mut out = Vec::new();
            for a in &axis {
                for b in &axis {
                    let mut p = Point::from_slice(&[*a, *b]);
                    p.resize(dim, 0.0);
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Checks `G₁ ≥ G₂` on grid × probes, then solves both ergodic problems and
/// passes iff `λ₁ ≥ λ₂ − 10⁻⁴`.
#[allow(clippy::too_many_arguments)]
pub fn comparison_check(
    model: &FactorModel,
    g1: &dyn Generator,
    g2: &dyn Generator,
    grid: &SpatialGrid,
    v0: &[f64],
    z_probes: &[Point],
    dt: f64,
    tol: f64,
) -> Result<ComparisonReport> {
    let mut min_gap = f64::INFINITY;
    for v in grid.points() {
        for z in z_probes {
            let gap = g1.value(&v, z)? - g2.value(&v, z)?;
            if gap < -1e-12 {
                return Err(Error::Dominance {
                    v: v.to_vec(),
                    z: z.to_vec(),
                    gap,
                });
            }
            min_gap = min_gap.min(gap);
        }
    }
    let l1 = solve_ergodic_false_transient(PdeProblem::new(model, g1)?, grid, dt, tol, v0)?.lambda;
    let l2 = solve_ergodic_false_transient(PdeProblem::new(model, g2)?, grid, dt, tol, v0)?.lambda;
    Ok(ComparisonReport {
        lambda1: l1,
        lambda2: l2,
        min_gap,
        passed: l1 >= l2 - COMPARISON_TOLERANCE,
    })
}
