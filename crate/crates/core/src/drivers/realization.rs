//! Quadratic realization functional `γ_{t,s}(u) = ∫ₜˢ ½|u_r|² dr`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Realization weight `τ` (0 for the plain game, −1 for the penalized example).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealizationSpec {
    pub tau: f64,
}

impl RealizationSpec {
    pub fn quadratic(tau: f64) -> Self {
        Self { tau }
    }

    pub fn value(&self, times: &[f64], u: &[f64], dim: usize, t: f64, s: f64) -> Result<f64> {
        realization_value(times, u, dim, t, s)
    }
}

/// Trapezoidal `∫ₜˢ ½|u_r|² dr` for a scenario path sampled at `times`
/// (row-major `u`, `dim` coordinates per time). The integrand is
/// interpolated linearly between samples, so the value is additive over
/// adjacent intervals up to rounding.
pub fn realization_value(times: &[f64], u: &[f64], dim: usize, t: f64, s: f64) -> Result<f64> {
    if s < t {
        return Err(Error::InvalidParameter(format!(
            "interval end {s} precedes start {t}"
        )));
    }
    if dim == 0 || u.len() != times.len() * dim {
        return Err(Error::DimensionMismatch {
            expected: times.len() * dim.max(1),
            got: u.len(),
        });
    }
    let (first, last) = match (times.first(), times.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidParameter("empty scenario path".into())),
    };
    if t < first || s > last {
        return Err(Error::InvalidParameter(format!(
            "[{t}, {s}] outside the sampled range"
        )));
    }
    let g = |k: usize| 0.5 * u[k * dim..(k + 1) * dim].iter().map(|x| x * x).sum::<f64>();
    let interp = |r: f64, k: usize| {
        let (t0, t1) = (times[k], times[k + 1]);
        let w = if t1 > t0 { (r - t0) / (t1 - t0) } else { 0.0 };
        (1.0 - w) * g(k) + w * g(k + 1)
    };
    let mut total = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let a = times[k].max(t);
        let b = times[k + 1].min(s);
        if b > a {
            total += 0.5 * (b - a) * (interp(a, k) + interp(b, k));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_paths() {
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        assert_eq!(
            realization_value(&times, &[0.0; 21], 1, 0.0, 2.0).unwrap(),
            0.0
        );
        let v = realization_value(&times, &[1.0; 21], 1, 0.0, 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(realization_value(&times, &[1.0; 21], 1, 1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn additive_over_adjacent_intervals(
            u in prop::collection::vec(-2.0f64..2.0, 42),
            r in 0.0f64..2.0,
        ) {
            let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
            let whole = realization_value(&times, &u, 2, 0.0, 2.0).unwrap();
            let a = realization_value(&times, &u, 2, 0.0, r).unwrap();
            let b = realization_value(&times, &u, 2, r, 2.0).unwrap();
            prop_assert!((whole - a - b).abs() <= 1e-12);
        }
    }
}
