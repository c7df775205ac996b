//! Built-in market fixtures.
//!
//! All fixtures share an Ornstein-Uhlenbeck factor `dV = −aV dt + κ dW` on
//! the moving coordinates and a constant stock volatility `σ`, with stock
//! drift `b = σθ` so the market price of risk is exactly `θ`:
//!
//! ```text
//! model1             θ(v) = θ_max·tanh(v),            power, Π = ℝ,     U = [−K_u, K_u]
//! nonrobust          θ ≡ θ₀,                          power, Π = ℝ,     U = {0}
//! large_uncertainty  θ(v) = θ_max·tanh(v),            power, Π = ℝ,     U = [−K_u, K_u], K_u large
//! model2             θ(v) = (θ_max·tanh(v₁), 0),      power, Π = ℝ×{0}, U = {−R ≤ u₁ ≤ u₂ ≤ R}
//! section7           θ(v) = θ₀ − θ_max·tanh(v),       log,   Π = U = [0, 1]
//! ```
//!
//! In `model2` the factor is two-dimensional with correlated noise
//! `κ = [[ρ̄, √(1−ρ̄²)], [0, 0]]`; the second coordinate never moves.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drivers::{DriverSpec, UtilityClass, Variant};
use crate::ergodic::{PdeProblem, SpatialGrid};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market::{FactorModel, MatrixField, ModelBounds, VectorField};
use crate::sets::{ConvexSet, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Model1,
    #[serde(rename = "nonrobust")]
    NonRobust,
    LargeUncertainty,
    Model2,
    Section7,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::Model1,
        FixtureKind::NonRobust,
        FixtureKind::LargeUncertainty,
        FixtureKind::Model2,
        FixtureKind::Section7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Model1 => "model1",
            FixtureKind::NonRobust => "nonrobust",
            FixtureKind::LargeUncertainty => "large_uncertainty",
            FixtureKind::Model2 => "model2",
            FixtureKind::Section7 => "section7",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture `{s}`")))
    }
}

/// Parameters of a fixture. Unused fields are ignored by fixtures that do
/// not need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureParams {
    /// Mean-reversion speed `a`.
    pub a: f64,
    /// Factor volatility (norm of the moving row of κ).
    pub kappa: f64,
    /// Stock volatility σ.
    pub sigma: f64,
    /// Scale of the tanh part of θ.
    pub theta_max: f64,
    /// Constant part of θ.
    pub theta0: f64,
    /// Power exponent δ.
    pub delta: f64,
    /// Scenario bound `K_u`.
    pub u_radius: f64,
    /// Ordered-box radius `R` (model2).
    pub r: f64,
    /// Correlation `ρ̄` (model2).
    pub rho_bar: f64,
    /// Optional descriptor overriding Π, e.g. `unconstrained:1` or `interval:-2,2`.
    pub pi: Option<String>,
    /// Optional descriptor overriding U.
    pub u: Option<String>,
    pub grid_n: usize,
    /// Half-width of the grid in stationary standard deviations.
    pub grid_sd: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self::for_kind(FixtureKind::Model1)
    }
}

impl FixtureParams {
    pub fn for_kind(kind: FixtureKind) -> Self {
        let base = FixtureParams {
            a: 2.0,
            kappa: 1.0,
            sigma: 0.2,
            theta_max: 0.5,
            theta0: 0.0,
            delta: 0.5,
            u_radius: 0.2,
            r: 0.2,
            rho_bar: 0.6,
            pi: None,
            u: None,
            grid_n: 201,
            grid_sd: 6.0,
        };
        match kind {
            FixtureKind::Model1 | FixtureKind::Model2 => base,
            FixtureKind::NonRobust => FixtureParams {
                theta_max: 0.0,
                theta0: 0.4,
                u_radius: 0.0,
                ..base
            },
            FixtureKind::LargeUncertainty => FixtureParams {
                a: 3.0,
                u_radius: 1.0,
                ..base
            },
            FixtureKind::Section7 => FixtureParams {
                theta_max: 0.4,
                theta0: -0.5,
                ..base
            },
        }
    }
}

/// A ready-to-solve market: model, driver, grid and reference point.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub params: FixtureParams,
    pub model: Arc<FactorModel>,
    pub spec: DriverSpec,
    pub grid: SpatialGrid,
    pub v0: Point,
}

impl Fixture {
    pub fn new(kind: FixtureKind) -> Result<Self> {
        Self::with_params(kind, FixtureParams::for_kind(kind))
    }

    pub fn model1() -> Self {
        Self::new(FixtureKind::Model1).expect("default fixture")
    }

    pub fn nonrobust() -> Self {
        Self::new(FixtureKind::NonRobust).expect("default fixture")
    }

    pub fn large_uncertainty() -> Self {
        Self::new(FixtureKind::LargeUncertainty).expect("default fixture")
    }

    pub fn model2() -> Self {
        Self::new(FixtureKind::Model2).expect("default fixture")
    }

    pub fn section7() -> Self {
        Self::new(FixtureKind::Section7).expect("default fixture")
    }

    pub fn with_params(kind: FixtureKind, params: FixtureParams) -> Result<Self> {
        let p = &params;
        positive("a", p.a)?;
        positive("kappa", p.kappa)?;
        positive("sigma", p.sigma)?;
        let (model, utility, pi_set, u_set, variant) = match kind {
            FixtureKind::Model1 | FixtureKind::NonRobust | FixtureKind::LargeUncertainty => {
                let theta = scalar_theta(p.theta0, p.theta_max);
                let model = scalar_model(p, theta)?;
                let u_set = if p.u_radius == 0.0 {
                    ConvexSet::singleton(vec![0.0])
                } else {
                    ConvexSet::interval(-p.u_radius, p.u_radius)?
                };
                let variant = if p.pi.is_none() {
                    Variant::Model1
                } else {
                    Variant::Generic
                };
                (
                    model,
                    UtilityClass::power(p.delta)?,
                    ConvexSet::unconstrained(1),
                    u_set,
                    variant,
                )
            }
            FixtureKind::Section7 => {
                let theta = scalar_theta(p.theta0, -p.theta_max);
                let model = scalar_model(p, theta)?;
                let variant = if p.pi.is_none() && p.u.is_none() {
                    Variant::Section7
                } else {
                    Variant::Generic
                };
                (
                    model,
                    UtilityClass::Log,
                    ConvexSet::interval(0.0, 1.0)?,
                    ConvexSet::interval(0.0, 1.0)?,
                    variant,
                )
            }
            FixtureKind::Model2 => {
                if !(p.rho_bar > 0.0 && p.rho_bar <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "rho_bar must lie in (0,1], got {}",
                        p.rho_bar
                    )));
                }
                let (a, tm, sigma) = (p.a, p.theta_max, p.sigma);
                let kappa = Matrix::from_rows(&[
                    &[
                        p.kappa * p.rho_bar,
                        p.kappa * (1.0 - p.rho_bar * p.rho_bar).sqrt(),
                    ],
                    &[0.0, 0.0],
                ])?;
                let eta = VectorField::Linear {
                    matrix: Matrix::from_rows(&[&[-a, 0.0], &[0.0, 0.0]])?,
                    offset: vec![0.0, 0.0],
                };
                let b = VectorField::custom(1, move |v, out| out[0] = sigma * tm * v[0].tanh());
                let sigma_m = MatrixField::Constant(Matrix::from_rows(&[&[sigma, 0.0]])?);
                let bounds = ModelBounds {
                    theta_bound: tm.abs(),
                    theta_lipschitz: tm.abs(),
                    dissipativity: a,
                };
                let theta = VectorField::custom(2, move |v, out| {
                    out[0] = tm * v[0].tanh();
                    out[1] = 0.0;
                });
                let model = FactorModel::new(eta, kappa, b, sigma_m, bounds)?.with_theta(theta)?;
                let variant = if p.pi.is_none() && p.u.is_none() {
                    Variant::Model2 { radius: p.r }
                } else {
                    Variant::Generic
                };
                (
                    model,
                    UtilityClass::power(p.delta)?,
                    ConvexSet::axis_slab(&[true, false]),
                    ConvexSet::ordered_box(p.r)?,
                    variant,
                )
            }
        };
        let pi_set = match &p.pi {
            Some(s) => s.parse()?,
            None => pi_set,
        };
        let u_set = match &p.u {
            Some(s) => s.parse()?,
            None => u_set,
        };
        let model = Arc::new(model);
        let spec = DriverSpec::for_model(utility, pi_set, u_set, model.clone(), variant)?;
        let grid = SpatialGrid::for_model(&model, p.grid_n, p.grid_sd)?;
        let v0 = grid.default_anchor();
        Ok(Self {
            kind,
            params,
            model,
            spec,
            grid,
            v0,
        })
    }

    pub fn problem(&self) -> PdeProblem<'_> {
        PdeProblem {
            model: &self.model,
            generator: &self.spec,
        }
    }

    /// Same fixture on a different number of grid nodes.
    pub fn with_grid_nodes(&self, nodes: usize) -> Result<Self> {
        Self::with_params(
            self.kind,
            FixtureParams {
                grid_n: nodes,
                ..self.params.clone()
            },
        )
    }
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{key} must be positive, got {x}"
        )))
    }
}

fn scalar_theta(theta0: f64, scale: f64) -> VectorField {
    if scale == 0.0 {
        VectorField::Constant(vec![theta0])
    } else {
        VectorField::custom(1, move |v, out| out[0] = theta0 + scale * v[0].tanh())
    }
}

fn scalar_model(p: &FixtureParams, theta: VectorField) -> Result<FactorModel> {
    let sigma = p.sigma;
    let b = match &theta {
        VectorField::Constant(c) => VectorField::Constant(vec![sigma * c[0]]),
        other => {
            let other = other.clone();
            VectorField::custom(1, move |v, out| {
                other.eval(v, out);
                out[0] *= sigma;
            })
        }
    };
    let bounds = ModelBounds {
        theta_bound: p.theta0.abs() + p.theta_max.abs(),
        theta_lipschitz: p.theta_max.abs(),
        dissipativity: p.a,
    };
    FactorModel::new(
        VectorField::mean_reverting(1, p.a),
        Matrix::from_rows(&[&[p.kappa]])?,
        b,
        MatrixField::Constant(Matrix::from_rows(&[&[sigma]])?),
        bounds,
    )?
    .with_theta(theta)
}
