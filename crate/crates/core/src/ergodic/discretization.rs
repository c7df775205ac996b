//! Finite-difference discretization of `L y = ½Tr(κκᵀ∇²y) + ηᵀ∇y` and of
//! the gradient `z = κᵀ∇y`.
//!
//! Interior nodes use the three-point second difference and, for the drift,
//! central differences where diffusion dominates (`|η|h ≤ (κκᵀ)_pp`) and
//! upwind differences elsewhere, so `L` stays a monotone matrix. Boundary
//! nodes drop the second derivative (linear extrapolation) and use the
//! inward one-sided difference, which is the upwind one for a dissipative
//! drift. `L·1 = 0` and `D·1 = 0` hold exactly.

use super::grid::SpatialGrid;
use crate::drivers::Generator;
use crate::error::{Error, Result};
use crate::linalg::{Banded, Matrix};
use crate::market::FactorModel;
use crate::sets::Point;

/// Factor dynamics plus generator: the data of the ergodic equation.
#[derive(Clone, Copy)]
pub struct PdeProblem<'a> {
    pub model: &'a FactorModel,
    pub generator: &'a dyn Generator,
}

impl<'a> PdeProblem<'a> {
    pub fn new(model: &'a FactorModel, generator: &'a dyn Generator) -> Result<Self> {
        if generator.dim() != model.dim_factor() {
            return Err(Error::DimensionMismatch {
                expected: model.dim_factor(),
                got: generator.dim(),
            });
        }
        Ok(Self { model, generator })
    }
}

pub(crate) struct Discretization {
    pub grid: SpatialGrid,
    pub n: usize,
    /// Brownian dimension (length of z).
    pub d: usize,
    pub band: usize,
    pub linear: Banded,
    /// One gradient operator per grid axis.
    pub grads: Vec<Banded>,
    /// Row of κ for each grid axis: `z_j = Σ_p κ[a_p][j] (D_p y)`.
    pub kappa_rows: Vec<Vec<f64>>,
    pub kappa: Matrix,
    pub points: Vec<Point>,
}

impl Discretization {
    pub fn new(model: &FactorModel, grid: &SpatialGrid) -> Result<Self> {
        if grid.dim_factor() != model.dim_factor() {
            return Err(Error::DimensionMismatch {
                expected: model.dim_factor(),
                got: grid.dim_factor(),
            });
        }
        let n = grid.len();
        let d = model.dim_factor();
        let g = grid.dim();
        let band = if g == 1 { 1 } else { grid.nodes(0) + 1 };
        let kappa = model.kappa();
        let kappa_rows: Vec<Vec<f64>> =
            grid.axes().iter().map(|&a| kappa.row(a).to_vec()).collect();
        let cov = |p: usize, q: usize| -> f64 {
            kappa_rows[p]
                .iter()
                .zip(&kappa_rows[q])
                .map(|(x, y)| x * y)
                .sum()
        };
        let mut linear = Banded::zeros(n, band, band);
        let mut grads: Vec<Banded> = (0..g).map(|_| Banded::zeros(n, band, band)).collect();
        let points = grid.points();
        let mut eta = vec![0.0; d];
        for k in 0..n {
            model.eta(&points[k], &mut eta);
            let idx = grid.multi_index(k);
            for p in 0..g {
                let (i, last, h, s) = (idx[p], grid.nodes(p) - 1, grid.spacing(p), grid.stride(p));
                let drift = eta[grid.axes()[p]];
                let a = cov(p, p);
                if i == 0 {
                    grads[p].add(k, k, -1.0 / h);
                    grads[p].add(k, k + s, 1.0 / h);
                    linear.add(k, k, -drift / h);
                    linear.add(k, k + s, drift / h);
                } else if i == last {
                    grads[p].add(k, k, 1.0 / h);
                    grads[p].add(k, k - s, -1.0 / h);
                    linear.add(k, k, drift / h);
                    linear.add(k, k - s, -drift / h);
                } else {
                    grads[p].add(k, k + s, 0.5 / h);
                    grads[p].add(k, k - s, -0.5 / h);
                    let diff = 0.5 * a / (h * h);
                    linear.add(k, k + s, diff);
                    linear.add(k, k - s, diff);
                    linear.add(k, k, -2.0 * diff);
                    if drift.abs() * h <= a {
                        linear.add(k, k + s, 0.5 * drift / h);
                        linear.add(k, k - s, -0.5 * drift / h);
                    } else if drift > 0.0 {
                        linear.add(k, k + s, drift / h);
                        linear.add(k, k, -drift / h);
                    } else {
                        linear.add(k, k, drift / h);
                        linear.add(k, k - s, -drift / h);
                    }
                }
            }
            if g == 2 && !grid.is_boundary(k) {
                let c = cov(0, 1) / (4.0 * grid.spacing(0) * grid.spacing(1));
                if c != 0.0 {
                    let n0 = grid.nodes(0);
                    linear.add(k, k + n0 + 1, c);
                    linear.add(k, k - n0 - 1, c);
                    linear.add(k, k + n0 - 1, -c);
                    linear.add(k, k + 1 - n0, -c);
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            n,
            d,
            band,
            linear,
            grads,
            kappa_rows,
            kappa: kappa.clone(),
            points,
        })
    }

    /// `z = κᵀ∇y` at every node, row-major `[node][j]`.
    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n * self.d];
        let mut dy = vec![0.0; self.n];
        for (p, op) in self.grads.iter().enumerate() {
            op.mul_vec(y, &mut dy);
            for k in 0..self.n {
                for j in 0..self.d {
                    z[k * self.d + j] += self.kappa_rows[p][j] * dy[k];
                }
            }
        }
        z
    }

    /// `G(v_k, z_k)` and `∂G/∂z` at every node.
    pub fn generator(&self, gen: &dyn Generator, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = self.gradient(y);
        let mut values = vec![0.0; self.n];
        let mut grads = vec![0.0; self.n * self.d];
        for k in 0..self.n {
            let zk = &z[k * self.d..(k + 1) * self.d];
            values[k] = gen.value_and_gradient(
                &self.points[k],
                zk,
                &mut grads[k * self.d..(k + 1) * self.d],
            )?;
        }
        Ok((values, grads))
    }

    /// Effective convection `c_p[k] = Σ_j ∂G/∂z_j κ[a_p][j]` of the linearized generator.
    pub fn convection(&self, ggrad: &[f64]) -> Vec<Vec<f64>> {
        (0..self.grads.len())
            .map(|p| {
                (0..self.n)
                    .map(|k| {
                        (0..self.d)
                            .map(|j| ggrad[k * self.d + j] * self.kappa_rows[p][j])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// `Σ_p diag(c_p) D_p`.
    pub fn linearized_generator(&self, ggrad: &[f64]) -> Banded {
        let conv = self.convection(ggrad);
        let mut out = Banded::zeros(self.n, self.band, self.band);
        for (p, op) in self.grads.iter().enumerate() {
            for k in 0..self.n {
                let c = conv[p][k];
                if c == 0.0 {
                    continue;
                }
                let lo = k.saturating_sub(self.band);
                let hi = (k + self.band).min(self.n - 1);
                for j in lo..=hi {
                    let a = op.get(k, j);
                    if a != 0.0 {
                        out.add(k, j, c * a);
                    }
                }
            }
        }
        out
    }

    /// Largest explicit step for which the generator's convection obeys
    /// `Δt Σ_p |c_p|/h_p ≤ 1`, and the node where it binds.
    pub fn explicit_step_bound(&self, ggrad: &[f64]) -> (f64, usize) {
        let conv = self.convection(ggrad);
        let mut worst = (f64::INFINITY, 0);
        for k in 0..self.n {
            let rate: f64 = (0..conv.len())
                .map(|p| conv[p][k].abs() / self.grid.spacing(p))
                .sum();
            if rate > 0.0 && 1.0 / rate < worst.0 {
                worst = (1.0 / rate, k);
            }
        }
        worst
    }

    pub fn apply_linear(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.linear.mul_vec(y, &mut out);
        out
    }

    /// `L y + G(v, κᵀ∇y) − λ` at every node.
    pub fn ergodic_residual(
        &self,
        gen: &dyn Generator,
        y: &[f64],
        lambda: f64,
    ) -> Result<Vec<f64>> {
        let ly = self.apply_linear(y);
        let (g, _) = self.generator(gen, y)?;
        Ok(ly.iter().zip(&g).map(|(a, b)| a + b - lambda).collect())
    }
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
