//! Closed-form drivers and strategies.

use super::DriverEval;
use crate::sets::{ConvexSet, Point};

/// Power utility with Π unconstrained:
///
/// ```text
/// u* = Proj_U(−θ − z/δ),   π* = (θ + z + u*)/(1−δ),
/// G  = δ/(2(1−δ)) dist²(U, −θ − z/δ) − |z|²/(2δ) − zᵀθ.
/// ```
pub(crate) fn model1(delta: f64, u_set: &ConvexSet, theta: &[f64], z: &[f64]) -> DriverEval {
    let d = theta.len();
    let target: Vec<f64> = (0..d).map(|i| -theta[i] - z[i] / delta).collect();
    let u_star = u_set.project_unchecked(&target);
    let dist_sq: f64 = target
        .iter()
        .zip(&u_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let pi_star: Point = (0..d)
        .map(|i| (theta[i] + z[i] + u_star[i]) / (1.0 - delta))
        .collect();
    let zz: f64 = z.iter().map(|x| x * x).sum();
    let zt: f64 = z.iter().zip(theta).map(|(a, b)| a * b).sum();
    let g = delta / (2.0 * (1.0 - delta)) * dist_sq - zz / (2.0 * delta) - zt;
    let grad_z = (0..d)
        .map(|i| delta * pi_star[i] + u_star[i] + z[i])
        .collect();
    DriverEval {
        g,
        grad_z,
        pi_raw: pi_star.clone(),
        pi_star,
        u_star,
        pi_outside: false,
    }
}

/// One stock, Π = ℝ×{0}, U = {−R ≤ u₁ ≤ u₂ ≤ R}. With `s = −θ − z₁/δ − (1−δ)z₂/δ·1{z₂≥0}`:
///
/// ```text
/// G = δ/(2(1−δ)) dist²([−R,R], s) − z₁²/(2δ) − θz₁
///     + ((2δ−1)z₂/(2δ) − z₁/δ − θ) z₂ 1{z₂≥0} + (½z₂ + R) z₂ 1{z₂<0}.
/// ```
///
/// The boundary case `z₂ = 0` belongs to the first branch.
pub(crate) fn model2(delta: f64, radius: f64, theta: &[f64], z: &[f64]) -> DriverEval {
    let th = theta[0];
    let (z1, z2) = (z[0], z[1]);
    let pos = z2 >= 0.0;
    let ind = if pos { 1.0 } else { 0.0 };
    let s = -th - z1 / delta - (1.0 - delta) / delta * z2 * ind;
    let u1 = s.clamp(-radius, radius);
    let mut g =
        delta / (2.0 * (1.0 - delta)) * (s - u1).powi(2) - z1 * z1 / (2.0 * delta) - th * z1;
    if pos {
        g += ((2.0 * delta - 1.0) / (2.0 * delta) * z2 - z1 / delta - th) * z2;
    } else {
        g += (0.5 * z2 + radius) * z2;
    }
    let pi1 = (th + z1 + u1) / (1.0 - delta);
    let u2 = if pos {
        (-th - z1 / delta - (1.0 - delta) / delta * z2).clamp(-radius, radius)
    } else {
        radius
    };
    let pi_star = Point::from_slice(&[pi1, 0.0]);
    DriverEval {
        g,
        grad_z: Point::from_slice(&[delta * pi1 + u1 + z1, u2 + z2]),
        pi_raw: pi_star.clone(),
        pi_star,
        u_star: Point::from_slice(&[u1, u2]),
        pi_outside: false,
    }
}

/// Worst scenario against `π₁ ≠ π₁*` in the one-stock example.
pub(crate) fn model2_beta(delta: f64, radius: f64, pi1: f64, z: &[f64]) -> Point {
    let pos = z[1] >= 0.0;
    let a = delta * pi1 + z[0] + if pos { z[1] } else { 0.0 };
    let sgn = if a > 0.0 {
        1.0
    } else if a < 0.0 {
        -1.0
    } else {
        0.0
    };
    let b2 = if pos { -radius * sgn } else { radius };
    Point::from_slice(&[-radius * sgn, b2])
}

/// Nature's reply in the quadratic-penalty example: `u = 1` iff `π + z ≤ ½`.
pub(crate) fn section7_beta(pi: f64, z: f64) -> Point {
    Point::from_slice(&[if pi + z <= 0.5 { 1.0 } else { 0.0 }])
}

/// Log utility with penalty `½u²`, Π = U = [0, 1]:
/// `G̃ = max_π min_u {−½π² + πθ + (π+z)u − ½u²}`.
///
/// For fixed π the inner minimum sits at an endpoint, so the outer objective
/// is `−½π² + πθ + min(0, π + z − ½)`, concave with a kink at `c = ½ − z`.
/// Its unconstrained maximizer is `θ+1`, `c` or `θ` by position of `c`
/// relative to `[θ, θ+1]`; the constrained maximizer is its clamp to
/// `[0, 1]`, and the clamp is flagged when active.
pub(crate) fn section7(theta: f64, z: f64) -> DriverEval {
    let c = 0.5 - z;
    let (raw, middle) = if c >= theta + 1.0 {
        (theta + 1.0, false)
    } else if c >= theta {
        (c, true)
    } else {
        (theta, false)
    };
    let pi = raw.clamp(0.0, 1.0);
    let outside = pi != raw;
    let u = section7_beta(pi, z)[0];
    let g = -0.5 * pi * pi + pi * theta + (pi + z) * u - 0.5 * u * u;
    // On the kink both endpoint scenarios are optimal and G̃ = −½c² + cθ.
    let grad = if middle && !outside { c - theta } else { u };
    DriverEval {
        g,
        grad_z: Point::from_slice(&[grad]),
        pi_star: Point::from_slice(&[pi]),
        u_star: Point::from_slice(&[u]),
        pi_raw: Point::from_slice(&[raw]),
        pi_outside: outside,
    }
}
