//! Small dense matrices and banded systems.
//!
//! Dense work (market price of risk, validation of κ) goes through nalgebra;
//! the finite-difference solvers only need banded LU without pivoting, which
//! is implemented here because the Jacobians are diagonally dominant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major dense matrix used on hot paths (κ·ΔW, pseudo-inverse products).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::InvalidParameter("matrix with no rows".into()));
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `out = self · x`
    #[inline]
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `out = selfᵀ · x`
    #[inline]
    pub fn mul_vec_transposed(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate().take(self.cols) {
                *o += self.data[i * self.cols + j] * xi;
            }
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// `selfᵀ (self selfᵀ)⁻¹`, the right pseudo-inverse of a full-row-rank matrix.
    pub fn right_pseudo_inverse(&self) -> Option<Self> {
        let s = self.to_nalgebra();
        let gram = &s * s.transpose();
        let inv = gram.cholesky()?.inverse();
        Some(Self::from_nalgebra(&(s.transpose() * inv)))
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().iter().sum()
    }

    pub fn is_positive_definite_gram(&self) -> bool {
        let s = self.to_nalgebra();
        (&s * s.transpose()).cholesky().is_some()
    }
}

/// Square banded matrix with `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            j + self.lower >= i && j <= i + self.upper,
            "({i},{j}) outside band"
        );
        i * self.width + (j + self.lower - i)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.lower < i || j > i + self.upper {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let j0 = i.saturating_sub(self.lower);
            let j1 = (i + self.upper).min(self.n - 1);
            let mut acc = 0.0;
            for j in j0..=j1 {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            *o = acc;
        }
    }

    /// Returns `a·self + b·other` (same band layout).
    pub fn combine(&self, a: f64, other: &Banded, b: f64) -> Banded {
        assert_eq!(
            (self.n, self.lower, self.upper),
            (other.n, other.lower, other.upper)
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Banded {
            data,
            ..self.clone()
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.add(i, i, value);
        }
    }

    /// In-place LU factorization without pivoting.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !pivot.is_finite() || pivot.abs() < 1e-300 {
                return Err(Error::InvalidParameter(format!(
                    "banded factorization hit a zero pivot at row {k}"
                )));
            }
            let i_end = (k + self.lower).min(n - 1);
            let j_end = (k + self.upper).min(n - 1);
            for i in k + 1..=i_end {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=j_end {
                    let skj = self.slot(k, j);
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * self.data[skj];
                }
            }
        }
        Ok(BandedLu { m: self })
    }

    pub fn solve(self, rhs: &mut [f64]) -> Result<()> {
        self.factorize()?.solve(rhs);
        Ok(())
    }
}

/// Factorized banded matrix; unit lower factor stored below the diagonal.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: Banded,
}

impl BandedLu {
    pub fn solve(&self, rhs: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        for i in 0..n {
            let j0 = i.saturating_sub(m.lower);
            let mut acc = rhs[i];
            for j in j0..i {
                acc -= m.data[m.slot(i, j)] * rhs[j];
            }
            rhs[i] = acc;
        }
        for i in (0..n).rev() {
            let j1 = (i + m.upper).min(n - 1);
            let mut acc = rhs[i];
            for j in i + 1..=j1 {
                acc -= m.data[m.slot(i, j)] * rhs[j];
            }
            rhs[i] = acc / m.data[m.slot(i, i)];
        }
    }
}
