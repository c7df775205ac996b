//! Coefficient functions of the factor market.

use std::fmt;
use std::sync::Arc;

use crate::linalg::Matrix;

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// A map `ℝ^d → ℝ^m`.
#[derive(Clone)]
pub enum VectorField {
    Constant(Vec<f64>),
    /// `matrix · v + offset`.
    Linear {
        matrix: Matrix,
        offset: Vec<f64>,
    },
    /// `out_i = scale_i · tanh(v_i)`; bounded and Lipschitz with constant `max |scale_i|`.
    Tanh {
        scale: Vec<f64>,
    },
    Custom {
        dim_out: usize,
        f: VectorFn,
    },
}

impl VectorField {
    pub fn zero(dim: usize) -> Self {
        VectorField::Constant(vec![0.0; dim])
    }

    /// The mean-reverting drift `−a·v` on ℝ^d.
    pub fn mean_reverting(dim: usize, a: f64) -> Self {
        VectorField::Linear {
            matrix: Matrix::diagonal(&vec![-a; dim]),
            offset: vec![0.0; dim],
        }
    }

    pub fn custom<F>(dim_out: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        VectorField::Custom {
            dim_out,
            f: Arc::new(f),
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            VectorField::Constant(c) => c.len(),
            VectorField::Linear { matrix, .. } => matrix.rows(),
            VectorField::Tanh { scale } => scale.len(),
            VectorField::Custom { dim_out, .. } => *dim_out,
        }
    }

    #[inline]
    pub fn eval(&self, v: &[f64], out: &mut [f64]) {
        match self {
            VectorField::Constant(c) => out.copy_from_slice(c),
            VectorField::Linear { matrix, offset } => {
                matrix.mul_vec(v, out);
                for (o, c) in out.iter_mut().zip(offset) {
                    *o += c;
                }
            }
            VectorField::Tanh { scale } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = scale[i] * v[i].tanh();
                }
            }
            VectorField::Custom { f, .. } => f(v, out),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, VectorField::Constant(_))
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Constant(c) => write!(f, "Constant({c:?})"),
            VectorField::Linear { matrix, offset } => write!(f, "Linear({matrix:?}, {offset:?})"),
            VectorField::Tanh { scale } => write!(f, "Tanh({scale:?})"),
            VectorField::Custom { dim_out, .. } => write!(f, "Custom(dim_out = {dim_out})"),
        }
    }
}

/// A map `ℝ^d → ℝ^{n×d}`.
#[derive(Clone)]
pub enum MatrixField {
    Constant(Matrix),
    Custom {
        rows: usize,
        cols: usize,
        f: MatrixFn,
    },
}

impl MatrixField {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixField::Constant(m) => (m.rows(), m.cols()),
            MatrixField::Custom { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn eval(&self, v: &[f64]) -> Matrix {
        match self {
            MatrixField::Constant(m) => m.clone(),
            MatrixField::Custom { f, .. } => f(v),
        }
    }
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Constant(m) => write!(f, "Constant({m:?})"),
            MatrixField::Custom { rows, cols, .. } => write!(f, "Custom({rows}x{cols})"),
        }
    }
}
