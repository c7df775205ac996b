//! Markovian feedback strategies read off a solution field.
//!
//! The saddle strategies and best responses are evaluated once per grid node
//! at `(v, z(v))` and interpolated in between; states beyond the grid use
//! the nearest edge value. Portfolios are capped at `|π| ≤ Π_cap` and every
//! capped node is counted.

use std::sync::Arc;

use crate::drivers::DriverSpec;
use crate::ergodic::{MarkovianSolutionField, SpatialGrid};
use crate::error::{check_dim, Result};
use crate::market::Feedback;
use crate::sets::Point;

pub const DEFAULT_PI_CAP: f64 = 10.0;

/// Feedback map tabulated on a spatial grid.
#[derive(Debug, Clone)]
pub struct GridFeedback {
    grid: SpatialGrid,
    dim: usize,
    values: Arc<Vec<f64>>,
    cap_hits: usize,
}

impl GridFeedback {
    pub fn tabulate<F>(grid: &SpatialGrid, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Result<Point>,
    {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for k in 0..grid.len() {
            let v = grid.point(k);
            let a = f(k, &v)?;
            check_dim(dim, a.len())?;
            values.extend_from_slice(&a);
        }
        Ok(Self {
            grid: grid.clone(),
            dim,
            values: Arc::new(values),
            cap_hits: 0,
        })
    }

    /// Node values, row-major `[node][component]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Number of nodes where the portfolio cap was active.
    pub fn cap_hits(&self) -> usize {
        self.cap_hits
    }

    /// Scales node values down to Euclidean norm `cap` where needed.
    pub fn capped(mut self, cap: f64) -> Self {
        let dim = self.dim;
        let mut values = (*self.values).clone();
        for chunk in values.chunks_mut(dim) {
            let n = chunk.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > cap {
                chunk.iter_mut().for_each(|x| *x *= cap / n);
                self.cap_hits += 1;
            }
        }
        self.values = Arc::new(values);
        self
    }

    /// `a(v) + offset` (a constant shift of every component).
    pub fn offset(&self, shift: &[f64]) -> Self {
        let values = self
            .values
            .chunks(self.dim)
            .flat_map(|c| c.iter().zip(shift).map(|(a, s)| a + s).collect::<Vec<_>>())
            .collect();
        Self {
            grid: self.grid.clone(),
            dim: self.dim,
            values: Arc::new(values),
            cap_hits: self.cap_hits,
        }
    }

    /// `scale · a(v)`.
    pub fn scaled(&self, scale: f64) -> Self {
        let values = self.values.iter().map(|a| a * scale).collect();
        Self {
            grid: self.grid.clone(),
            dim: self.dim,
            values: Arc::new(values),
            cap_hits: self.cap_hits,
        }
    }
}

impl Feedback for GridFeedback {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn eval(&self, v: &[f64], out: &mut [f64]) {
        let (stencil, _) = self.grid.stencil(v);
        for (j, o) in out.iter_mut().enumerate() {
            *o = stencil.apply(&self.values, self.dim, j);
        }
    }
}

/// Saddle strategies and best responses of a driver given a solution field.
pub struct Strategies<'a> {
    spec: &'a DriverSpec,
    field: &'a MarkovianSolutionField,
    pi_cap: f64,
}

impl<'a> Strategies<'a> {
    pub fn new(spec: &'a DriverSpec, field: &'a MarkovianSolutionField) -> Self {
        Self {
            spec,
            field,
            pi_cap: DEFAULT_PI_CAP,
        }
    }

    pub fn with_pi_cap(mut self, cap: f64) -> Self {
        self.pi_cap = cap;
        self
    }

    fn z(&self, k: usize) -> &[f64] {
        self.field.z.at_node(k)
    }

    /// `π*(v) = π*(v, z(v))`.
    pub fn pi_star(&self) -> Result<GridFeedback> {
        let g = GridFeedback::tabulate(&self.field.grid, self.spec.dim(), |k, v| {
            self.spec.pi_star(v, self.z(k))
        })?;
        Ok(g.capped(self.pi_cap))
    }

    /// `u*(v) = u*(v, z(v))`.
    pub fn u_star(&self) -> Result<GridFeedback> {
        GridFeedback::tabulate(&self.field.grid, self.spec.dim(), |k, v| {
            self.spec.u_star(v, self.z(k))
        })
    }

    /// Nature's best reply `β*(π)(v)` to the feedback portfolio `pi`.
    pub fn beta_star(&self, pi: &dyn Feedback) -> Result<GridFeedback> {
        let mut p = vec![0.0; pi.dim()];
        GridFeedback::tabulate(&self.field.grid, self.spec.dim(), |k, v| {
            pi.eval(v, &mut p);
            self.spec.beta_star(v, self.z(k), &p)
        })
    }

    /// The investor's best reply `α*(u)(v)` to the scenario feedback `u`.
    pub fn alpha_star(&self, u: &dyn Feedback) -> Result<GridFeedback> {
        let mut w = vec![0.0; u.dim()];
        let g = GridFeedback::tabulate(&self.field.grid, self.spec.dim(), |k, v| {
            u.eval(v, &mut w);
            let w = self.spec.u_set().project(&w)?;
            self.spec.alpha_star(v, self.z(k), &w)
        })?;
        Ok(g.capped(self.pi_cap))
    }
}
