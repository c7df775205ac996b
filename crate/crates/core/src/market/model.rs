//! Factor market specification and validation of its standing assumptions.

use serde::Serialize;

use super::fields::{MatrixField, VectorField};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::rng::PathNoise;
use crate::sets::{ConvexSet, Point};

/// Declared regularity constants: `|θ| ≤ K_θ`, `θ` is `C_θ`-Lipschitz and
/// `(η(v)−η(v̄))ᵀ(v−v̄) ≤ −C_η|v−v̄|²`. Zero means "not declared".
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ModelBounds {
    pub theta_bound: f64,
    pub theta_lipschitz: f64,
    pub dissipativity: f64,
}

/// `dV = η(V)dt + κ dW` on ℝ^d and `n ≤ d` stocks with drift `b(V)` and
/// volatility `σ(V)`.
#[derive(Debug, Clone)]
pub struct FactorModel {
    d: usize,
    n: usize,
    eta: VectorField,
    kappa: Matrix,
    b: VectorField,
    sigma: MatrixField,
    bounds: ModelBounds,
    /// `σᵀ(σσᵀ)⁻¹` when σ is constant.
    sigma_pinv: Option<Matrix>,
    /// Closed form of θ, when declared.
    theta_closed: Option<VectorField>,
}

impl FactorModel {
    pub fn new(
        eta: VectorField,
        kappa: Matrix,
        b: VectorField,
        sigma: MatrixField,
        bounds: ModelBounds,
    ) -> Result<Self> {
        let d = kappa.rows();
        check_dim(d, kappa.cols())?;
        check_dim(d, eta.dim_out())?;
        let (n, cols) = sigma.shape();
        check_dim(d, cols)?;
        check_dim(n, b.dim_out())?;
        if n == 0 || n > d {
            return Err(Error::InvalidParameter(format!(
                "need 1 ≤ n ≤ d, got n = {n}, d = {d}"
            )));
        }
        let sigma_pinv = match &sigma {
            MatrixField::Constant(s) => {
                Some(
                    s.right_pseudo_inverse()
                        .ok_or_else(|| Error::RankDeficient {
                            point: vec![0.0; d],
                        })?,
                )
            }
            MatrixField::Custom { .. } => None,
        };
        Ok(Self {
            d,
            n,
            eta,
            kappa,
            b,
            sigma,
            bounds,
            sigma_pinv,
            theta_closed: None,
        })
    }

    /// Declares a closed form for θ, used in place of the pseudo-inverse.
    /// It is checked against `σθ = b` and minimality at a few states.
    pub fn with_theta(mut self, theta: VectorField) -> Result<Self> {
        check_dim(self.d, theta.dim_out())?;
        self.theta_closed = None;
        let mut closed = vec![0.0; self.d];
        for probe in [-1.5, -0.3, 0.0, 0.7, 2.0] {
            let v = vec![probe; self.d];
            let exact = self.market_price_of_risk(&v)?;
            theta.eval(&v, &mut closed);
            let err = exact
                .iter()
                .zip(&closed)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > 1e-10 * (1.0 + exact.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                return Err(Error::InvalidParameter(format!(
                    "declared θ differs from σᵀ(σσᵀ)⁻¹b by {err:.3e} at v = {v:?}"
                )));
            }
        }
        self.theta_closed = Some(theta);
        Ok(self)
    }

    pub fn dim_factor(&self) -> usize {
        self.d
    }

    pub fn dim_stocks(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> &Matrix {
        &self.kappa
    }

    pub fn bounds(&self) -> ModelBounds {
        self.bounds
    }

    #[inline]
    pub fn eta(&self, v: &[f64], out: &mut [f64]) {
        self.eta.eval(v, out)
    }

    pub fn stock_drift(&self, v: &[f64], out: &mut [f64]) {
        self.b.eval(v, out)
    }

    pub fn stock_volatility(&self, v: &[f64]) -> Matrix {
        self.sigma.eval(v)
    }

    /// Factor coordinates that actually move: nonzero row of κ or drift.
    pub fn active_axes(&self) -> Vec<usize> {
        let probe = vec![1.0; self.d];
        let mut drift = vec![0.0; self.d];
        self.eta(&probe, &mut drift);
        (0..self.d)
            .filter(|&i| self.kappa.row(i).iter().any(|k| *k != 0.0) || drift[i] != 0.0)
            .collect()
    }

    /// Hot-path evaluation of θ(v) without residual checks. Writes NaN when
    /// σ(v) loses rank.
    #[inline]
    pub fn theta(&self, v: &[f64], out: &mut [f64]) {
        if let Some(t) = &self.theta_closed {
            return t.eval(v, out);
        }
        let mut bv: Point = Point::from_elem(0.0, self.n);
        self.b.eval(v, &mut bv);
        match &self.sigma_pinv {
            Some(p) => p.mul_vec(&bv, out),
            None => match self.sigma.eval(v).right_pseudo_inverse() {
                Some(p) => p.mul_vec(&bv, out),
                None => out.iter_mut().for_each(|o| *o = f64::NAN),
            },
        }
    }

    /// `θ(v) = σᵀ(σσᵀ)⁻¹ b(v)`, the minimal-norm solution of `σθ = b`.
    pub fn market_price_of_risk(&self, v: &[f64]) -> Result<Point> {
        check_dim(self.d, v.len())?;
        let sigma = self.sigma.eval(v);
        let pinv = sigma
            .right_pseudo_inverse()
            .ok_or_else(|| Error::RankDeficient { point: v.to_vec() })?;
        let mut bv = vec![0.0; self.n];
        self.b.eval(v, &mut bv);
        let mut theta = Point::from_elem(0.0, self.d);
        pinv.mul_vec(&bv, &mut theta);
        let mut back = vec![0.0; self.n];
        sigma.mul_vec(&theta, &mut back);
        let scale = bv.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let residual = back
            .iter()
            .zip(&bv)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !(residual <= 1e-12 * scale) {
            return Err(Error::RankDeficient { point: v.to_vec() });
        }
        Ok(theta)
    }

    /// Half-width of the sampling cube used for validation: six stationary
    /// standard deviations of an Ornstein–Uhlenbeck factor with rate `C_η`.
    pub fn sampling_half_width(&self) -> f64 {
        let a = if self.bounds.dissipativity > 0.0 {
            self.bounds.dissipativity
        } else {
            1.0
        };
        6.0 / (2.0 * a).sqrt()
    }
}

/// `3δ C_θ/(1−δ) · max(K_θ + K_u, 1)`: the dissipativity rate above which
/// the ergodic equation is well posed.
pub fn well_posedness_threshold(delta: f64, c_theta: f64, k_theta: f64, k_u: f64) -> f64 {
    3.0 * delta * c_theta / (1.0 - delta) * (k_theta + k_u).max(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub empirical_dissipativity: f64,
    pub empirical_theta_bound: f64,
    pub empirical_theta_lipschitz: f64,
    pub scenario_bound: f64,
    /// `C_η` used in the test (declared value capped by the empirical one).
    pub dissipativity_used: f64,
    pub threshold: f64,
    pub dissipative_on_all_pairs: bool,
    pub sigma_full_rank: bool,
    pub kappa_nondegenerate: bool,
    pub kappa_trace_norm: f64,
    pub passed: bool,
}

/// Samples random pairs `(v, v̄)` from a cube around the origin and tests the
/// well-posedness condition. Failures are reported, not raised.
pub fn validate_assumptions(
    model: &FactorModel,
    delta: f64,
    u_set: &ConvexSet,
    sample_count: usize,
    seed: u64,
) -> AdmissibilityReport {
    let d = model.dim_factor();
    let axes = model.active_axes();
    let hw = model.sampling_half_width();
    let mut noise = PathNoise::new(seed, 0);
    let declared = model.bounds();

    let mut c_eta = f64::INFINITY;
    let mut k_theta: f64 = 0.0;
    let mut c_theta: f64 = 0.0;
    let mut dissipative = true;
    let mut full_rank = true;
    let (mut v, mut w) = (vec![0.0; d], vec![0.0; d]);
    let (mut ev, mut ew) = (vec![0.0; d], vec![0.0; d]);
    for _ in 0..sample_count.max(1) {
        for &i in &axes {
            v[i] = noise.uniform(-hw, hw);
            w[i] = noise.uniform(-hw, hw);
        }
        model.eta(&v, &mut ev);
        model.eta(&w, &mut ew);
        let mut inner = 0.0;
        let mut dist_sq = 0.0;
        for i in 0..d {
            inner += (ev[i] - ew[i]) * (v[i] - w[i]);
            dist_sq += (v[i] - w[i]).powi(2);
        }
        if dist_sq > 0.0 {
            c_eta = c_eta.min(-inner / dist_sq);
            if declared.dissipativity > 0.0
                && inner > -declared.dissipativity * dist_sq + 1e-9 * dist_sq
            {
                dissipative = false;
            }
        }
        match (
            model.market_price_of_risk(&v),
            model.market_price_of_risk(&w),
        ) {
            (Ok(tv), Ok(tw)) => {
                k_theta = k_theta
                    .max(crate::sets::norm(&tv))
                    .max(crate::sets::norm(&tw));
                if dist_sq > 0.0 {
                    c_theta = c_theta.max(crate::sets::dist(&tv, &tw) / dist_sq.sqrt());
                }
            }
            _ => full_rank = false,
        }
    }
    if !c_eta.is_finite() {
        c_eta = 0.0;
    }
    if declared.dissipativity <= 0.0 && c_eta <= 0.0 {
        dissipative = false;
    }
    let c_eta_used = if declared.dissipativity > 0.0 {
        declared.dissipativity.min(c_eta)
    } else {
        c_eta
    };
    let k_u = u_set.max_norm().unwrap_or(f64::INFINITY);
    let threshold = well_posedness_threshold(
        delta,
        c_theta.max(declared.theta_lipschitz),
        k_theta.max(declared.theta_bound),
        k_u,
    );
    let kappa = model.kappa();
    let kappa_nondegenerate = kappa.is_positive_definite_gram();
    AdmissibilityReport {
        samples: sample_count,
        empirical_dissipativity: c_eta,
        empirical_theta_bound: k_theta,
        empirical_theta_lipschitz: c_theta,
        scenario_bound: k_u,
        dissipativity_used: c_eta_used,
        threshold,
        dissipative_on_all_pairs: dissipative,
        sigma_full_rank: full_rank,
        kappa_nondegenerate,
        kappa_trace_norm: kappa.trace_norm(),
        passed: dissipative && full_rank && c_eta_used >= threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_model(a: f64, theta_max: f64) -> FactorModel {
        FactorModel::new(
            VectorField::mean_reverting(1, a),
            Matrix::identity(1),
            VectorField::Tanh {
                scale: vec![0.2 * theta_max],
            },
            MatrixField::Constant(Matrix::from_rows(&[&[0.2]]).unwrap()),
            ModelBounds {
                theta_bound: theta_max,
                theta_lipschitz: theta_max,
                dissipativity: a,
            },
        )
        .unwrap()
    }

    #[test]
    fn market_price_of_risk_examples() {
        let m = FactorModel::new(
            VectorField::zero(2),
            Matrix::identity(2),
            VectorField::Constant(vec![0.1]),
            MatrixField::Constant(Matrix::from_rows(&[&[0.2, 0.0]]).unwrap()),
            ModelBounds::default(),
        )
        .unwrap();
        let t = m.market_price_of_risk(&[0.3, -1.0]).unwrap();
        assert_relative_eq!(t[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(t[1], 0.0, epsilon = 1e-14);

        let id = FactorModel::new(
            VectorField::zero(2),
            Matrix::identity(2),
            VectorField::custom(2, |v, out| {
                out[0] = v[0].sin();
                out[1] = 3.0;
            }),
            MatrixField::Constant(Matrix::identity(2)),
            ModelBounds::default(),
        )
        .unwrap();
        let t = id.market_price_of_risk(&[0.7, 0.0]).unwrap();
        assert_eq!(t.as_slice(), &[0.7f64.sin(), 3.0]);

        let zero = scalar_model(1.0, 0.0);
        assert_eq!(zero.market_price_of_risk(&[2.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn singular_volatility_is_rejected() {
        let m = FactorModel::new(
            VectorField::zero(1),
            Matrix::identity(1),
            VectorField::Constant(vec![0.1]),
            MatrixField::Custom {
                rows: 1,
                cols: 1,
                f: std::sync::Arc::new(|v: &[f64]| Matrix::from_rows(&[&[v[0]]]).unwrap()),
            },
            ModelBounds::default(),
        )
        .unwrap();
        assert!(matches!(
            m.market_price_of_risk(&[0.0]),
            Err(Error::RankDeficient { .. })
        ));
        assert!(m.market_price_of_risk(&[0.5]).is_ok());
    }

    #[test]
    fn empirical_dissipativity_of_linear_drift() {
        let m = scalar_model(1.5, 0.5);
        let r = validate_assumptions(&m, 0.5, &ConvexSet::interval(-0.2, 0.2).unwrap(), 1000, 1);
        assert!((r.empirical_dissipativity - 1.5).abs() < 1e-9);
        assert!(r.dissipative_on_all_pairs);
        assert!(r.empirical_theta_lipschitz <= 0.5 + 1e-12);
    }

    #[test]
    fn threshold_examples() {
        let t = well_posedness_threshold(0.5, 0.5, 0.5, 1.0);
        assert_relative_eq!(t, 2.25, epsilon = 1e-15);
        assert!(3.0 >= t);
        assert!(1.0 < t);
        let u = ConvexSet::interval(-1.0, 1.0).unwrap();
        assert!(validate_assumptions(&scalar_model(3.0, 0.5), 0.5, &u, 1000, 2).passed);
        assert!(!validate_assumptions(&scalar_model(1.0, 0.5), 0.5, &u, 1000, 2).passed);
    }
}
