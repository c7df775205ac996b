//! Pointwise game Hamiltonians, drivers and strategy maps.
//!
//! For power utility `x^δ/δ` the investor maximizes and nature minimizes
//!
//! ```text
//! F(v, z, π, u) = −½δ(1−δ)|π|² + δπᵀ(θ(v) + z + u) + zᵀu + ½|z|²,
//! G(v, z)       = inf_{u∈U} sup_{π∈Π} F,
//! ```
//!
//! with `α*(u) = Proj_Π((θ+z+u)/(1−δ))` the best response to a scenario,
//! `u*` the minimizer of the convex map `u ↦ F(α*(u), u)`, `π* = α*(u*)` and
//! `β*(π)` the worst scenario against a given portfolio. Log and exponential
//! utilities follow the same pattern with their own integrands; the two
//! market examples and the quadratic-penalty example have closed forms.
//!
//! `G` enters the ergodic equation as `½Tr(κκᵀ∇²y) + ηᵀ∇y + G(v, κᵀ∇y) = λ`.

mod closed;
mod generator;
mod outer;
mod realization;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

pub use generator::{ConstantGenerator, FrozenScenario, Generator, Shifted, ZPenalized};
pub use realization::{realization_value, RealizationSpec};

use crate::error::{check_dim, Error, Result};
use crate::market::{FactorModel, VectorField};
use crate::sets::{ConvexSet, Point};

/// Tolerance of the `π = π*` test inside `β*`.
pub const OPTIMAL_PI_TOL: f64 = 1e-9;
const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UtilityClass {
    Power { delta: f64 },
    Log,
    Exponential { gamma: f64 },
}

impl UtilityClass {
    pub fn power(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "risk aversion δ = {delta} outside (0, 1)"
            )));
        }
        Ok(UtilityClass::Power { delta })
    }

    pub fn exponential(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "risk aversion γ = {gamma} must be positive"
            )));
        }
        Ok(UtilityClass::Exponential { gamma })
    }

    /// δ for power utility, 1 otherwise (the weight of π in the game drift).
    pub fn delta(&self) -> f64 {
        match self {
            UtilityClass::Power { delta } => *delta,
            _ => 1.0,
        }
    }
}

impl fmt::Display for UtilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityClass::Power { delta } => write!(f, "power:{delta}"),
            UtilityClass::Log => write!(f, "log"),
            UtilityClass::Exponential { gamma } => write!(f, "exp:{gamma}"),
        }
    }
}

impl FromStr for UtilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config {
            key: s.to_string(),
            message: "expected power:δ, log or exp:γ".into(),
        };
        let (kind, p) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "power" => UtilityClass::power(p.trim().parse().map_err(|_| bad())?),
            "log" => Ok(UtilityClass::Log),
            "exp" | "exponential" => {
                UtilityClass::exponential(p.trim().parse().map_err(|_| bad())?)
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Variant {
    Generic,
    /// Power utility, Π unconstrained, any compact U.
    Model1,
    /// One stock, two-dimensional noise: Π = ℝ×{0}, U = {−R ≤ u₁ ≤ u₂ ≤ R}.
    Model2 {
        radius: f64,
    },
    /// Log utility with quadratic realization: Π = U = [0, 1], θ ∈ [−1, 0].
    Section7,
}

/// Utility, constraint sets, market price of risk and variant.
#[derive(Clone)]
pub struct DriverSpec {
    utility: UtilityClass,
    pi_set: ConvexSet,
    u_set: ConvexSet,
    theta: VectorField,
    variant: Variant,
    realization: RealizationSpec,
}

impl fmt::Debug for DriverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriverSpec")
            .field("utility", &self.utility)
            .field("pi_set", &self.pi_set.to_string())
            .field("u_set", &self.u_set.to_string())
            .field("variant", &self.variant)
            .finish()
    }
}

/// Optimal portfolio together with the formula's raw value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiStar {
    pub value: Point,
    /// Value before projection onto Π (differs only for the quadratic-penalty example).
    pub raw: Point,
    pub outside_pi: bool,
}

/// Everything the solvers need at one `(v, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverEval {
    pub g: f64,
    /// `∂G/∂z` by the envelope theorem.
    pub grad_z: Point,
    pub pi_star: Point,
    pub u_star: Point,
    pub pi_raw: Point,
    pub pi_outside: bool,
}

impl DriverSpec {
    pub fn new(
        utility: UtilityClass,
        pi_set: ConvexSet,
        u_set: ConvexSet,
        theta: VectorField,
        variant: Variant,
    ) -> Result<Self> {
        let d = theta.dim_out();
        check_dim(d, pi_set.dim())?;
        check_dim(d, u_set.dim())?;
        if !u_set.is_bounded() {
            return Err(Error::InvalidParameter(
                "the scenario set must be compact".into(),
            ));
        }
        if !pi_set.contains(&vec![0.0; d], 0.0) {
            return Err(Error::InvalidParameter(
                "the portfolio set must contain the origin".into(),
            ));
        }
        let mut realization = RealizationSpec::quadratic(0.0);
        match variant {
            Variant::Generic => {}
            Variant::Model1 => {
                if !matches!(utility, UtilityClass::Power { .. }) || !pi_set.is_unconstrained() {
                    return Err(Error::InvalidParameter(
                        "model1 requires power utility and an unconstrained portfolio set".into(),
                    ));
                }
            }
            Variant::Model2 { radius } => {
                let slab = ConvexSet::axis_slab(&[true, false]);
                if !matches!(utility, UtilityClass::Power { .. })
                    || pi_set != slab
                    || u_set != ConvexSet::ordered_box(radius)?
                {
                    return Err(Error::InvalidParameter(
                        "model2 requires power utility, Π = ℝ×{0} and U = ordered box of the given radius"
                            .into(),
                    ));
                }
            }
            Variant::Section7 => {
                let unit = ConvexSet::interval(0.0, 1.0)?;
                if utility != UtilityClass::Log || pi_set != unit || u_set != unit {
                    return Err(Error::InvalidParameter(
                        "the quadratic-penalty example requires log utility and Π = U = [0, 1]"
                            .into(),
                    ));
                }
                realization = RealizationSpec::quadratic(-1.0);
            }
        }
        Ok(Self {
            utility,
            pi_set,
            u_set,
            theta,
            variant,
            realization,
        })
    }

    /// Driver whose θ is the market price of risk of `model`.
    pub fn for_model(
        utility: UtilityClass,
        pi_set: ConvexSet,
        u_set: ConvexSet,
        model: Arc<FactorModel>,
        variant: Variant,
    ) -> Result<Self> {
        let d = model.dim_factor();
        let theta = VectorField::custom(d, move |v, out| model.theta(v, out));
        Self::new(utility, pi_set, u_set, theta, variant)
    }

    /// Driver with a constant θ.
    pub fn constant_theta(
        utility: UtilityClass,
        pi_set: ConvexSet,
        u_set: ConvexSet,
        theta: &[f64],
        variant: Variant,
    ) -> Result<Self> {
        Self::new(
            utility,
            pi_set,
            u_set,
            VectorField::Constant(theta.to_vec()),
            variant,
        )
    }

    pub fn dim(&self) -> usize {
        self.theta.dim_out()
    }

    pub fn utility(&self) -> UtilityClass {
        self.utility
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn pi_set(&self) -> &ConvexSet {
        &self.pi_set
    }

    pub fn u_set(&self) -> &ConvexSet {
        &self.u_set
    }

    pub fn realization(&self) -> RealizationSpec {
        self.realization
    }

    #[inline]
    pub fn theta(&self, v: &[f64]) -> Point {
        let mut out = Point::from_elem(0.0, self.dim());
        self.theta.eval(v, &mut out);
        out
    }

    fn check_vz(&self, v: &[f64], z: &[f64]) -> Result<()> {
        let d = self.dim();
        if self.theta.is_constant() {
            // Constant θ ignores the state; allow any state dimension.
        } else {
            check_dim(d, v.len())?;
        }
        check_dim(d, z.len())
    }

    /// The pointwise integrand `F(v, z, π, u)`.
    pub fn hamiltonian(&self, v: &[f64], z: &[f64], pi: &[f64], u: &[f64]) -> Result<f64> {
        self.check_vz(v, z)?;
        self.pi_set.require(pi)?;
        self.u_set.require(u)?;
        Ok(self.f_unchecked(&self.theta(v), z, pi, u))
    }

    pub(crate) fn f_unchecked(&self, theta: &[f64], z: &[f64], pi: &[f64], u: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let sq = |a: &[f64]| dot(a, a);
        if self.variant == Variant::Section7 {
            return -0.5 * pi[0] * pi[0] + pi[0] * theta[0] + (pi[0] + z[0]) * u[0]
                - 0.5 * u[0] * u[0];
        }
        match self.utility {
            UtilityClass::Power { delta } => {
                let mut cross = 0.0;
                for i in 0..pi.len() {
                    cross += pi[i] * (theta[i] + z[i] + u[i]);
                }
                -0.5 * delta * (1.0 - delta) * sq(pi) + delta * cross + dot(z, u) + 0.5 * sq(z)
            }
            UtilityClass::Log => {
                let mut cross = 0.0;
                for i in 0..pi.len() {
                    cross += pi[i] * theta[i] + (pi[i] + z[i]) * u[i];
                }
                -0.5 * sq(pi) + cross
            }
            UtilityClass::Exponential { gamma } => {
                let mut acc = 0.0;
                for i in 0..pi.len() {
                    acc += 0.5 * (gamma * pi[i] - z[i]).powi(2) - gamma * pi[i] * (theta[i] + u[i])
                        + z[i] * u[i];
                }
                acc
            }
        }
    }

    /// Best response of the investor to scenario `u`.
    pub fn alpha_star(&self, v: &[f64], z: &[f64], u: &[f64]) -> Result<Point> {
        self.check_vz(v, z)?;
        self.u_set.require(u)?;
        Ok(self.alpha_unchecked(&self.theta(v), z, u))
    }

    pub(crate) fn alpha_unchecked(&self, theta: &[f64], z: &[f64], u: &[f64]) -> Point {
        let raw: Vec<f64> = match (self.variant, self.utility) {
            (Variant::Section7, _) => vec![theta[0] + u[0]],
            (_, UtilityClass::Power { delta }) => (0..u.len())
                .map(|i| (theta[i] + z[i] + u[i]) / (1.0 - delta))
                .collect(),
            (_, UtilityClass::Log) => (0..u.len()).map(|i| theta[i] + u[i]).collect(),
            // The investor minimizes the exponential integrand.
            (_, UtilityClass::Exponential { gamma }) => (0..u.len())
                .map(|i| (z[i] + theta[i] + u[i]) / gamma)
                .collect(),
        };
        self.pi_set.project_unchecked(&raw)
    }

    /// Full evaluation at `(v, z)`: value, gradient in `z` and saddle strategies.
    pub fn evaluate(&self, v: &[f64], z: &[f64]) -> Result<DriverEval> {
        self.check_vz(v, z)?;
        let theta = self.theta(v);
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::RankDeficient { point: v.to_vec() });
        }
        match self.variant {
            Variant::Model1 => Ok(closed::model1(self.delta_power(), &self.u_set, &theta, z)),
            Variant::Model2 { radius } => Ok(closed::model2(self.delta_power(), radius, &theta, z)),
            Variant::Section7 => Ok(closed::section7(theta[0], z[0])),
            Variant::Generic => self.evaluate_generic(&theta, z),
        }
    }

    fn delta_power(&self) -> f64 {
        match self.utility {
            UtilityClass::Power { delta } => delta,
            _ => unreachable!("variant validated at construction"),
        }
    }

    fn evaluate_generic(&self, theta: &[f64], z: &[f64]) -> Result<DriverEval> {
        let d = self.dim();
        if let UtilityClass::Power { delta } = self.utility {
            if self.pi_set.is_unconstrained() {
                return Ok(closed::model1(delta, &self.u_set, theta, z));
            }
        }
        let u_star: Point = match &self.u_set {
            ConvexSet::Singleton { point } => Point::from_slice(point),
            set => match self.utility {
                UtilityClass::Power { delta } => {
                    let start: Vec<f64> = (0..d).map(|i| -theta[i] - z[i] / delta).collect();
                    outer::minimize(set, &start, delta / (1.0 - delta), |u, g| {
                        let a = self.alpha_unchecked(theta, z, u);
                        for i in 0..d {
                            g[i] = delta * a[i] + z[i];
                        }
                        self.f_unchecked(theta, z, &a, u)
                    })?
                }
                UtilityClass::Log => {
                    let start: Vec<f64> = (0..d).map(|i| -theta[i] - z[i]).collect();
                    outer::minimize(set, &start, 1.0, |u, g| {
                        let a = self.alpha_unchecked(theta, z, u);
                        for i in 0..d {
                            g[i] = a[i] + z[i];
                        }
                        self.f_unchecked(theta, z, &a, u)
                    })?
                }
                UtilityClass::Exponential { gamma } => {
                    // Nature maximizes the concave map u ↦ inf_π F.
                    let start: Vec<f64> = theta.iter().map(|t| -t).collect();
                    outer::minimize(set, &start, 1.0, |u, g| {
                        let a = self.alpha_unchecked(theta, z, u);
                        for i in 0..d {
                            g[i] = gamma * a[i] - z[i];
                        }
                        -self.f_unchecked(theta, z, &a, u)
                    })?
                }
            },
        };
        let pi_star = self.alpha_unchecked(theta, z, &u_star);
        let g = self.f_unchecked(theta, z, &pi_star, &u_star);
        let grad_z: Point = (0..d)
            .map(|i| match self.utility {
                UtilityClass::Power { delta } => delta * pi_star[i] + u_star[i] + z[i],
                UtilityClass::Log => u_star[i],
                UtilityClass::Exponential { gamma } => z[i] - gamma * pi_star[i] + u_star[i],
            })
            .collect();
        Ok(DriverEval {
            g,
            grad_z,
            pi_raw: pi_star.clone(),
            pi_star,
            u_star,
            pi_outside: false,
        })
    }

    /// `G(v, z)`.
    pub fn driver(&self, v: &[f64], z: &[f64]) -> Result<f64> {
        Ok(self.evaluate(v, z)?.g)
    }

    /// Worst-case scenario `u*(v, z)`.
    pub fn u_star(&self, v: &[f64], z: &[f64]) -> Result<Point> {
        Ok(self.evaluate(v, z)?.u_star)
    }

    /// Optimal portfolio `π*(v, z)`.
    pub fn pi_star(&self, v: &[f64], z: &[f64]) -> Result<Point> {
        Ok(self.evaluate(v, z)?.pi_star)
    }

    pub fn pi_star_detail(&self, v: &[f64], z: &[f64]) -> Result<PiStar> {
        let e = self.evaluate(v, z)?;
        Ok(PiStar {
            value: e.pi_star,
            raw: e.pi_raw,
            outside_pi: e.pi_outside,
        })
    }

    /// Worst-case response `β*(π)` of nature to the portfolio `pi`.
    pub fn beta_star(&self, v: &[f64], z: &[f64], pi: &[f64]) -> Result<Point> {
        self.check_vz(v, z)?;
        check_dim(self.dim(), pi.len())?;
        let theta = self.theta(v);
        match self.variant {
            Variant::Section7 => return Ok(closed::section7_beta(pi[0], z[0])),
            Variant::Model2 { radius } => {
                let e = closed::model2(self.delta_power(), radius, &theta, z);
                if (pi[0] - e.pi_star[0]).abs() <= OPTIMAL_PI_TOL {
                    return Ok(e.u_star);
                }
                return Ok(closed::model2_beta(self.delta_power(), radius, pi[0], z));
            }
            _ => {}
        }
        let e = self.evaluate(v, z)?;
        if crate::sets::dist(pi, &e.pi_star) <= OPTIMAL_PI_TOL {
            return Ok(e.u_star);
        }
        // F is affine in u; nature minimizes it (maximizes for exponential).
        let c: Vec<f64> = (0..self.dim())
            .map(|i| match self.utility {
                UtilityClass::Power { delta } => delta * pi[i] + z[i],
                UtilityClass::Log => pi[i] + z[i],
                UtilityClass::Exponential { gamma } => gamma * pi[i] - z[i],
            })
            .collect();
        self.u_set.argmin_linear(&c)
    }

    /// Membership-checked `π ∈ Π` helper for callers building deviations.
    pub fn in_pi(&self, pi: &[f64]) -> bool {
        self.pi_set.contains(pi, MEMBERSHIP_TOL)
    }
}

#[cfg(test)]
mod tests;
