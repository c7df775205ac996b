//! Uniform tensor grids over one or two factor coordinates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::FactorModel;
use crate::sets::Point;

pub const MIN_NODES: usize = 101;

/// Grid over the factor coordinates `axes`; the remaining coordinates are
/// frozen at `base`. Node `k` has multi-index `(k mod N₀, k div N₀)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialGrid {
    dim_factor: usize,
    axes: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    base: Vec<f64>,
}

impl SpatialGrid {
    pub fn new(
        dim_factor: usize,
        axes: Vec<usize>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        nodes: Vec<usize>,
    ) -> Result<Self> {
        let g = axes.len();
        if g == 0 || g > 2 {
            return Err(Error::Unsupported(format!(
                "grids over {g} factor coordinates"
            )));
        }
        if lower.len() != g || upper.len() != g || nodes.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                got: lower.len(),
            });
        }
        if axes.iter().any(|a| *a >= dim_factor) {
            return Err(Error::InvalidParameter(format!(
                "grid axes {axes:?} exceed d = {dim_factor}"
            )));
        }
        for p in 0..g {
            if nodes[p] < MIN_NODES {
                return Err(Error::InvalidParameter(format!(
                    "{} nodes on axis {p}; at least {MIN_NODES} are required",
                    nodes[p]
                )));
            }
            if !(upper[p] > lower[p]) {
                return Err(Error::InvalidParameter(format!(
                    "empty grid interval on axis {p}"
                )));
            }
        }
        let spacing = (0..g)
            .map(|p| (upper[p] - lower[p]) / (nodes[p] - 1) as f64)
            .collect();
        Ok(Self {
            dim_factor,
            axes,
            lower,
            upper,
            nodes,
            spacing,
            base: vec![0.0; dim_factor],
        })
    }

    /// One-dimensional grid for a scalar factor.
    pub fn line(lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        Self::new(1, vec![0], vec![lower], vec![upper], vec![nodes])
    }

    /// Grid covering `±sd_multiple` stationary standard deviations of every
    /// moving coordinate, linearizing `η` at the origin.
    pub fn for_model(model: &FactorModel, nodes: usize, sd_multiple: f64) -> Result<Self> {
        let d = model.dim_factor();
        let axes = model.active_axes();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for &a in &axes {
            let rate = mean_reversion_rate(model, a);
            if !(rate > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "factor coordinate {a} is not mean reverting (rate {rate})"
                )));
            }
            let vol: f64 = model
                .kappa()
                .row(a)
                .iter()
                .map(|k| k * k)
                .sum::<f64>()
                .sqrt();
            let sd = vol / (2.0 * rate).sqrt();
            lower.push(-sd_multiple * sd);
            upper.push(sd_multiple * sd);
        }
        Self::new(d, axes.clone(), lower, upper, vec![nodes; axes.len()])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn dim_factor(&self) -> usize {
        self.dim_factor
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn nodes(&self, p: usize) -> usize {
        self.nodes[p]
    }

    pub fn spacing(&self, p: usize) -> f64 {
        self.spacing[p]
    }

    pub fn lower(&self, p: usize) -> f64 {
        self.lower[p]
    }

    pub fn upper(&self, p: usize) -> f64 {
        self.upper[p]
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset between neighbours along grid axis `p`.
    pub fn stride(&self, p: usize) -> usize {
        if p == 0 {
            1
        } else {
            self.nodes[0]
        }
    }

    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        [k % self.nodes[0], k / self.nodes[0]]
    }

    pub fn coord(&self, p: usize, i: usize) -> f64 {
        if i + 1 == self.nodes[p] {
            self.upper[p]
        } else {
            self.lower[p] + i as f64 * self.spacing[p]
        }
    }

    /// Full factor state of node `k`.
    pub fn point(&self, k: usize) -> Point {
        let mut v = Point::from_slice(&self.base);
        let idx = self.multi_index(k);
        for (p, &a) in self.axes.iter().enumerate() {
            v[a] = self.coord(p, idx[p]);
        }
        v
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        let idx = self.multi_index(k);
        (0..self.dim()).any(|p| idx[p] == 0 || idx[p] + 1 == self.nodes[p])
    }

    /// Node closest to the full state `v`.
    pub fn nearest(&self, v: &[f64]) -> usize {
        let mut k = 0;
        for (p, &a) in self.axes.iter().enumerate() {
            let i = ((v[a] - self.lower[p]) / self.spacing[p])
                .round()
                .clamp(0.0, (self.nodes[p] - 1) as f64);
            k += i as usize * self.stride(p);
        }
        k
    }

    /// Default reference point: the node nearest to the origin.
    pub fn default_anchor(&self) -> Point {
        self.point(self.nearest(&vec![0.0; self.dim_factor]))
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.axes
            .iter()
            .enumerate()
            .all(|(p, &a)| v[a] >= self.lower[p] - 1e-12 && v[a] <= self.upper[p] + 1e-12)
    }

    /// Interpolation stencil of the full state `v`: up to four nodes with
    /// bilinear weights. States outside the grid are clamped to it and
    /// reported through the flag.
    #[inline]
    pub fn stencil(&self, v: &[f64]) -> (Stencil, bool) {
        if let [a] = self.axes[..] {
            let last = (self.nodes[0] - 1) as f64;
            let x = (v[a] - self.lower[0]) / self.spacing[0];
            let outside = !(0.0..=last).contains(&x);
            let x = x.clamp(0.0, last);
            let k = (x as usize).min(self.nodes[0] - 2);
            let w = x - k as f64;
            return (
                Stencil {
                    nodes: [k, k + 1, 0, 0],
                    weights: [1.0 - w, w, 0.0, 0.0],
                    len: 2,
                },
                outside,
            );
        }
        let mut outside = false;
        let mut base = [0usize; 2];
        let mut w = [0.0f64; 2];
        for (p, &a) in self.axes.iter().enumerate() {
            let last = (self.nodes[p] - 1) as f64;
            let mut x = (v[a] - self.lower[p]) / self.spacing[p];
            if !(0.0..=last).contains(&x) {
                outside = true;
                x = x.clamp(0.0, last);
            }
            let i = (x as usize).min(self.nodes[p] - 2);
            base[p] = i;
            w[p] = x - i as f64;
        }
        let n0 = self.nodes[0];
        let k = base[0] + n0 * base[1];
        let stencil = Stencil {
            nodes: [k, k + 1, k + n0, k + n0 + 1],
            weights: [
                (1.0 - w[0]) * (1.0 - w[1]),
                w[0] * (1.0 - w[1]),
                (1.0 - w[0]) * w[1],
                w[0] * w[1],
            ],
            len: 4,
        };
        (stencil, outside)
    }

    /// Linear (bilinear in 2-D) interpolation of node values; `stride` values
    /// per node, component `comp`. States outside the grid are clamped to it
    /// and reported through the flag.
    #[inline]
    pub fn interpolate_strided(
        &self,
        values: &[f64],
        stride: usize,
        comp: usize,
        v: &[f64],
    ) -> (f64, bool) {
        let (s, outside) = self.stencil(v);
        (s.apply(values, stride, comp), outside)
    }

    pub fn interpolate(&self, values: &[f64], v: &[f64]) -> (f64, bool) {
        self.interpolate_strided(values, 1, 0, v)
    }
}

/// Nodes and weights of one interpolation.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    nodes: [usize; 4],
    weights: [f64; 4],
    len: usize,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64], stride: usize, comp: usize) -> f64 {
        let at = |i: usize| self.weights[i] * values[self.nodes[i] * stride + comp];
        if self.len == 2 {
            at(0) + at(1)
        } else {
            at(0) + at(1) + at(2) + at(3)
        }
    }
}

fn mean_reversion_rate(model: &FactorModel, axis: usize) -> f64 {
    let d = model.dim_factor();
    let eps = 1e-4;
    let mut vp = vec![0.0; d];
    let mut vm = vec![0.0; d];
    vp[axis] = eps;
    vm[axis] = -eps;
    let (mut ep, mut em) = (vec![0.0; d], vec![0.0; d]);
    model.eta(&vp, &mut ep);
    model.eta(&vm, &mut em);
    -(ep[axis] - em[axis]) / (2.0 * eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = SpatialGrid::line(-3.0, 3.0, 201).unwrap();
        assert_eq!(g.len(), 201);
        assert!((g.spacing(0) - 0.03).abs() < 1e-15);
        assert_eq!(g.point(100)[0], 0.0);
        assert_eq!(g.default_anchor()[0], 0.0);
        assert!(g.is_boundary(0) && g.is_boundary(200) && !g.is_boundary(7));
        assert!(SpatialGrid::line(-1.0, 1.0, 50).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_affine_data() {
        let g = SpatialGrid::new(
            2,
            vec![0, 1],
            vec![-1.0, -2.0],
            vec![1.0, 2.0],
            vec![101, 101],
        )
        .unwrap();
        let vals: Vec<f64> = g.points().iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        let (v, out) = g.interpolate(&vals, &[0.123, -1.77]);
        assert!((v - (2.0 * 0.123 + 1.77 + 0.5)).abs() < 1e-12);
        assert!(!out);
        let (_, out) = g.interpolate(&vals, &[1.5, 0.0]);
        assert!(out);
    }
}
