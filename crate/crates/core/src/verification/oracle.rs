//! Exhaustive-grid oracles for the pointwise game.
//!
//! Both players' sets are replaced by grids of spacing `resolution` (bounds
//! included, unbounded directions cut at `±PI_CLIP`), and the Hamiltonian is
//! tabulated on the product grid.

use serde::Serialize;

use crate::drivers::{DriverSpec, Variant};
use crate::error::{Error, Result};
use crate::exec::Backend;
use crate::sets::Point;

/// Half-width used for unbounded portfolio directions.
pub const PI_CLIP: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleGap {
    pub maxmin: f64,
    pub minmax: f64,
    /// `minmax − maxmin`; nonnegative up to grid error.
    pub gap: f64,
}

/// Grid maximizer of `π ↦ min_u F` and nature's grid reply to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxminPoint {
    pub value: f64,
    pub pi: Point,
    pub reply: Point,
}

/// Values closer than this are treated as ties.
const TIE: f64 = 1e-9;

/// Rows indexed by π, columns by u.
fn table(
    spec: &DriverSpec,
    v: &[f64],
    z: &[f64],
    resolution: f64,
) -> Result<(usize, usize, Vec<f64>)> {
    let (pis, us) = grids(spec, resolution)?;
    table_on(spec, v, z, &pis, &us).map(|h| (pis.len(), us.len(), h))
}

fn grids(spec: &DriverSpec, resolution: f64) -> Result<(Vec<Point>, Vec<Point>)> {
    Ok((
        spec.pi_set().grid(resolution, PI_CLIP)?,
        spec.u_set().grid(resolution, PI_CLIP)?,
    ))
}

fn table_on(
    spec: &DriverSpec,
    v: &[f64],
    z: &[f64],
    pis: &[Point],
    us: &[Point],
) -> Result<Vec<f64>> {
    let theta = spec.theta(v);
    // Validates dimensions once through the checked entry point.
    spec.hamiltonian(v, z, &pis[0], &us[0])?;
    let rows = Backend::default().map(pis.len(), |i| {
        us.iter()
            .map(|u| spec.f_unchecked(&theta, z, &pis[i], u))
            .collect::<Vec<_>>()
    });
    Ok(rows.concat())
}

/// `max_π min_u F` and `min_u max_π F` on the product grid.
pub fn saddle_gap(spec: &DriverSpec, v: &[f64], z: &[f64], resolution: f64) -> Result<SaddleGap> {
    let (np, nu, h) = table(spec, v, z, resolution)?;
    let maxmin = (0..np)
        .map(|i| {
            h[i * nu..(i + 1) * nu]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let minmax = (0..nu)
        .map(|j| {
            (0..np)
                .map(|i| h[i * nu + j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(SaddleGap {
        maxmin,
        minmax,
        gap: minmax - maxmin,
    })
}

/// Grid value of the driver in each variant's own order: `min_u max_π F`,
/// except `max_π min_u F` for the quadratic-penalty example and
/// `max_u min_π F` for exponential utility.
pub fn brute_force_g(spec: &DriverSpec, v: &[f64], z: &[f64], resolution: f64) -> Result<f64> {
    let s = saddle_gap(spec, v, z, resolution)?;
    Ok(match (spec.variant(), spec.utility()) {
        (Variant::Section7, _) => s.maxmin,
        (_, crate::drivers::UtilityClass::Exponential { .. }) => {
            exponential_value(spec, v, z, resolution)?
        }
        _ => s.minmax,
    })
}

fn exponential_value(spec: &DriverSpec, v: &[f64], z: &[f64], resolution: f64) -> Result<f64> {
    let (np, nu, h) = table(spec, v, z, resolution)?;
    Ok((0..nu)
        .map(|j| (0..np).map(|i| h[i * nu + j]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `argmax_π min_u F` on the product grid with nature's minimizing reply.
/// Among (near-)tied replies the quadratic-penalty example takes the largest
/// `u`, matching its closed-form branch; other variants take the first.
pub fn maxmin_point(
    spec: &DriverSpec,
    v: &[f64],
    z: &[f64],
    resolution: f64,
) -> Result<MaxminPoint> {
    let (pis, us) = grids(spec, resolution)?;
    let h = table_on(spec, v, z, &pis, &us)?;
    let nu = us.len();
    let row_min = |i: usize| {
        h[i * nu..(i + 1) * nu]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    let best = (0..pis.len())
        .map(|i| (i, row_min(i)))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    let (i, value) = best;
    let mut ties = (0..nu).filter(|&j| h[i * nu + j] <= value + TIE);
    let j = if spec.variant() == Variant::Section7 {
        ties.next_back()
    } else {
        ties.next()
    }
    .expect("the minimum is attained");
    Ok(MaxminPoint {
        value,
        pi: pis[i].clone(),
        reply: us[j].clone(),
    })
}

/// Largest second difference of `F` along either player's grid with the
/// other player's action held fixed. Nonpositive iff `F` is concave in each
/// argument on the grid. One-dimensional sets only.
pub fn max_second_difference(
    spec: &DriverSpec,
    v: &[f64],
    z: &[f64],
    resolution: f64,
) -> Result<f64> {
    if spec.pi_set().dim() != 1 || spec.u_set().dim() != 1 {
        return Err(Error::Unsupported(
            "second differences of a multi-dimensional Hamiltonian".into(),
        ));
    }
    let (pis, us) = grids(spec, resolution)?;
    let h = table_on(spec, v, z, &pis, &us)?;
    let (np, nu) = (pis.len(), us.len());
    let at = |i: usize, j: usize| h[i * nu + j];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..np {
        for j in 0..nu {
            if i > 0 && i + 1 < np {
                worst = worst.max(at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j));
            }
            if j > 0 && j + 1 < nu {
                worst = worst.max(at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1));
            }
        }
    }
    Ok(worst)
}
