//! Solution fields on a grid and the forward performance process built from them.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::grid::SpatialGrid;
use crate::drivers::UtilityClass;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sets::Point;

/// `z = κᵀ∇y` on the grid, stored row-major `[node][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub values: Vec<f64>,
    pub dim: usize,
    /// `max_k |z_k|`.
    pub sup_norm: f64,
}

impl GradientField {
    pub fn at_node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }
}

/// Gradient of a grid function: central differences in the interior,
/// first-order one-sided differences at the edges, then `z = κᵀ∇y`.
pub fn extract_z(grid: &SpatialGrid, y: &[f64], kappa: &Matrix) -> GradientField {
    let d = kappa.cols();
    let n = grid.len();
    let mut values = vec![0.0; n * d];
    for k in 0..n {
        let idx = grid.multi_index(k);
        for (p, &axis) in grid.axes().iter().enumerate() {
            let (s, h, i) = (grid.stride(p), grid.spacing(p), idx[p]);
            let dy = if i == 0 {
                (y[k + s] - y[k]) / h
            } else if i + 1 == grid.nodes(p) {
                (y[k] - y[k - s]) / h
            } else {
                (y[k + s] - y[k - s]) / (2.0 * h)
            };
            for j in 0..d {
                values[k * d + j] += kappa.get(axis, j) * dy;
            }
        }
    }
    let sup_norm = (0..n)
        .map(|k| {
            values[k * d..(k + 1) * d]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    GradientField {
        values,
        dim: d,
        sup_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    VanishingDiscount,
    FalseTransient,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::VanishingDiscount => "vanishing_discount",
            SolveMethod::FalseTransient => "false_transient",
        })
    }
}

/// One step of the vanishing-discount trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoTraceEntry {
    pub rho: f64,
    /// `ρ·y^ρ(v₀)`.
    pub scaled_value: f64,
    pub newton_iterations: usize,
}

/// Markovian solution `(y, z, λ)` of the ergodic equation, normalized by `y(v₀) = 0`.
#[derive(Debug, Clone)]
pub struct MarkovianSolutionField {
    pub grid: SpatialGrid,
    pub y: Vec<f64>,
    pub z: GradientField,
    pub lambda: f64,
    pub v0: Point,
    pub method: SolveMethod,
    /// Sup-norm of `Ly + G(v, z) − λ` over the grid.
    pub residual_norm: f64,
    pub rho_trace: Vec<RhoTraceEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub lambda: f64,
    pub v0: Vec<f64>,
    pub residual_norm: f64,
    pub method: SolveMethod,
    pub rho_trace: Vec<RhoTraceEntry>,
    pub z_bound: f64,
    pub warnings: Vec<String>,
}

impl MarkovianSolutionField {
    pub fn dim(&self) -> usize {
        self.z.dim
    }

    pub fn z_bound(&self) -> f64 {
        self.z.sup_norm
    }

    /// `y(v)` by (bi)linear interpolation; the flag reports clamping to the grid.
    pub fn y_at(&self, v: &[f64]) -> (f64, bool) {
        self.grid.interpolate(&self.y, v)
    }

    pub fn z_at(&self, v: &[f64]) -> (Point, bool) {
        interpolate_vector(&self.grid, &self.z, v)
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            lambda: self.lambda,
            v0: self.v0.to_vec(),
            residual_norm: self.residual_norm,
            method: self.method,
            rho_trace: self.rho_trace.clone(),
            z_bound: self.z.sup_norm,
            warnings: self.warnings.clone(),
        }
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// CSV with columns `v_1[,v_2],y,z_1..z_d`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_field_csv(&self.grid, &self.y, &self.z, out)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Largest `|y(v_k)| / (1 + |v_k|)` over the grid: a bounded value
    /// reflects at most linear growth.
    pub fn linear_growth_constant(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                let v = self.grid.point(k);
                let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                self.y[k].abs() / (1.0 + r)
            })
            .fold(0.0, f64::max)
    }
}

/// Solution of the discounted stationary equation for one `ρ`.
#[derive(Debug, Clone)]
pub struct DiscountedSolutionField {
    pub rho: f64,
    pub grid: SpatialGrid,
    pub y: Vec<f64>,
    pub z: GradientField,
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

impl DiscountedSolutionField {
    pub fn y_at(&self, v: &[f64]) -> (f64, bool) {
        self.grid.interpolate(&self.y, v)
    }

    pub fn z_at(&self, v: &[f64]) -> (Point, bool) {
        interpolate_vector(&self.grid, &self.z, v)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_field_csv(&self.grid, &self.y, &self.z, out)
    }
}

fn interpolate_vector(grid: &SpatialGrid, z: &GradientField, v: &[f64]) -> (Point, bool) {
    let mut out = Point::new();
    let mut outside = false;
    for j in 0..z.dim {
        let (x, o) = grid.interpolate_strided(&z.values, z.dim, j, v);
        out.push(x);
        outside |= o;
    }
    (out, outside)
}

fn write_field_csv<W: Write>(
    grid: &SpatialGrid,
    y: &[f64],
    z: &GradientField,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=grid.dim()).map(|p| format!("v_{p}")).collect();
    header.push("y".into());
    header.extend((1..=z.dim).map(|j| format!("z_{j}")));
    w.write_record(&header)?;
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        let mut rec: Vec<String> = (0..grid.dim())
            .map(|p| grid.coord(p, idx[p]).to_string())
            .collect();
        rec.push(y[k].to_string());
        rec.extend(z.at_node(k).iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Value of the forward performance process together with an extrapolation flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForwardValue {
    pub value: f64,
    /// The factor state lay outside the grid and `y` was clamped.
    pub extrapolated: bool,
}

/// `U(x, t)` at factor state `v`:
///
/// ```text
/// power:        (x^δ/δ)·exp(y(v) − λt)
/// log:          ln x + y(v) − λt
/// exponential:  −exp(−γx + y(v) − λt)
/// ```
pub fn forward_process_value(
    utility: UtilityClass,
    x: f64,
    t: f64,
    v: &[f64],
    field: &MarkovianSolutionField,
) -> Result<ForwardValue> {
    let (y, extrapolated) = field.y_at(v);
    let drift = y - field.lambda * t;
    let value = match utility {
        UtilityClass::Power { delta } => {
            require_positive_wealth(x)?;
            x.powf(delta) / delta * drift.exp()
        }
        UtilityClass::Log => {
            require_positive_wealth(x)?;
            x.ln() + drift
        }
        UtilityClass::Exponential { gamma } => -(-gamma * x + drift).exp(),
    };
    Ok(ForwardValue {
        value,
        extrapolated,
    })
}

pub(crate) fn require_positive_wealth(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "wealth must be positive, got {x}"
        )))
    }
}
