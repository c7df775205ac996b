//! Closed convex constraint sets for portfolios (Π) and scenarios (U).
//!
//! Every set supports an exact Euclidean projection, a membership test and
//! a linear minimization oracle. Sets of dimension at most two can also be
//! enumerated on a grid for the brute-force oracles.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};

pub type Point = SmallVec<[f64; 4]>;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// ℝ^dim.
    Unconstrained {
        dim: usize,
    },
    /// Product of intervals. Bounds may be infinite; `[0, 0]` pins a
    /// coordinate, so axis slabs such as ℝ×{0} are boxes too.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// The triangle `-R ≤ u₁ ≤ u₂ ≤ R` in ℝ².
    OrderedBox {
        radius: f64,
    },
    Singleton {
        point: Vec<f64>,
    },
}

impl ConvexSet {
    pub fn unconstrained(dim: usize) -> Self {
        ConvexSet::Unconstrained { dim }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::cube(1, lo, hi)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::InvalidParameter(format!(
                "empty box {lower:?} x {upper:?}"
            )));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    /// Product of ℝ (where `free[i]`) and {0} (elsewhere), e.g. Π = ℝ×{0}.
    pub fn axis_slab(free: &[bool]) -> Self {
        let lower = free
            .iter()
            .map(|&f| if f { f64::NEG_INFINITY } else { 0.0 })
            .collect();
        let upper = free
            .iter()
            .map(|&f| if f { f64::INFINITY } else { 0.0 })
            .collect();
        ConvexSet::Box { lower, upper }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || center.is_empty() {
            return Err(Error::InvalidParameter(format!("ball radius {radius}")));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn ordered_box(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ordered box radius {radius}"
            )));
        }
        Ok(ConvexSet::OrderedBox { radius })
    }

    pub fn singleton(point: Vec<f64>) -> Self {
        ConvexSet::Singleton { point }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Unconstrained { dim } => *dim,
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::OrderedBox { .. } => 2,
            ConvexSet::Singleton { point } => point.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvexSet::Unconstrained { .. } => "unconstrained",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::OrderedBox { .. } => "ordered-box",
            ConvexSet::Singleton { .. } => "singleton",
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        match self {
            ConvexSet::Unconstrained { .. } => true,
            ConvexSet::Box { lower, upper } => {
                lower.iter().all(|l| *l == f64::NEG_INFINITY)
                    && upper.iter().all(|u| *u == f64::INFINITY)
            }
            _ => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::Unconstrained { .. } => false,
            ConvexSet::Box { lower, upper } => lower.iter().chain(upper).all(|b| b.is_finite()),
            _ => true,
        }
    }

    /// `max_{u ∈ set} |u|`, `None` when unbounded.
    pub fn max_norm(&self) -> Option<f64> {
        if !self.is_bounded() {
            return None;
        }
        Some(match self {
            ConvexSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Ball { center, radius } => norm(center) + radius,
            ConvexSet::OrderedBox { radius } => radius * std::f64::consts::SQRT_2,
            ConvexSet::Singleton { point } => norm(point),
            ConvexSet::Unconstrained { .. } => unreachable!(),
        })
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            ConvexSet::Unconstrained { .. } => true,
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            ConvexSet::Ball { center, radius } => dist(x, center) <= radius + tol,
            ConvexSet::OrderedBox { radius } => {
                x[0] >= -radius - tol && x[1] <= radius + tol && x[0] <= x[1] + tol
            }
            ConvexSet::Singleton { point } => dist(x, point) <= tol,
        }
    }

    pub(crate) fn require(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.contains(x, 1e-9) {
            Ok(())
        } else {
            Err(Error::NotInSet {
                set: self.kind(),
                point: x.to_vec(),
            })
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &[f64]) -> Point {
        match self {
            ConvexSet::Unconstrained { .. } => Point::from_slice(x),
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            ConvexSet::Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    Point::from_slice(x)
                } else {
                    let s = radius / d;
                    x.iter().zip(center).map(|(v, c)| c + s * (v - c)).collect()
                }
            }
            ConvexSet::OrderedBox { radius } => project_ordered_box(*radius, x),
            ConvexSet::Singleton { point } => Point::from_slice(point),
        }
    }

    /// `dist(set, x)²`.
    pub fn dist_sq(&self, x: &[f64]) -> Result<f64> {
        let p = self.project(x)?;
        Ok(x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// A minimizer of `cᵀu` over the set. Ties resolve to the lower bound
    /// coordinate (boxes) or to the first vertex in lexicographic order.
    pub fn argmin_linear(&self, c: &[f64]) -> Result<Point> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: c.len(),
            });
        }
        match self {
            ConvexSet::Singleton { point } => Ok(Point::from_slice(point)),
            ConvexSet::Box { lower, upper } => {
                let mut out = Point::new();
                for ((ci, l), u) in c.iter().zip(lower).zip(upper) {
                    let v = if *ci > 0.0 {
                        *l
                    } else if *ci < 0.0 {
                        *u
                    } else if l.is_finite() {
                        *l
                    } else if u.is_finite() {
                        *u
                    } else {
                        0.0
                    };
                    if !v.is_finite() {
                        return Err(Error::Unsupported(
                            "linear objective unbounded below on the set".into(),
                        ));
                    }
                    out.push(v);
                }
                Ok(out)
            }
            ConvexSet::Ball { center, radius } => {
                let n = norm(c);
                if n == 0.0 {
                    return Ok(Point::from_slice(center));
                }
                Ok(center
                    .iter()
                    .zip(c)
                    .map(|(m, ci)| m - radius * ci / n)
                    .collect())
            }
            ConvexSet::OrderedBox { radius } => {
                let r = *radius;
                let vertices = [[-r, -r], [-r, r], [r, r]];
                let mut best = vertices[0];
                let mut best_val = c[0] * best[0] + c[1] * best[1];
                for v in &vertices[1..] {
                    let val = c[0] * v[0] + c[1] * v[1];
                    if val < best_val {
                        best = *v;
                        best_val = val;
                    }
                }
                Ok(Point::from_slice(&best))
            }
            ConvexSet::Unconstrained { .. } => {
                if c.iter().all(|v| *v == 0.0) {
                    Ok(Point::from_elem(0.0, c.len()))
                } else {
                    Err(Error::Unsupported(
                        "linear objective unbounded below on ℝ^d".into(),
                    ))
                }
            }
        }
    }

    /// Axis-aligned bounding box; infinite bounds are replaced by `±clip`.
    pub fn bounding_box(&self, clip: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        match self {
            ConvexSet::Unconstrained { .. } => (vec![-clip; d], vec![clip; d]),
            ConvexSet::Box { lower, upper } => (
                lower.iter().map(|l| l.max(-clip)).collect(),
                upper.iter().map(|u| u.min(clip)).collect(),
            ),
            ConvexSet::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            ConvexSet::OrderedBox { radius } => (vec![-radius; 2], vec![*radius; 2]),
            ConvexSet::Singleton { point } => (point.clone(), point.clone()),
        }
    }

    /// Grid points of spacing `resolution` lying in the set (dimension ≤ 2).
    ///
    /// Finite bounds are always grid nodes; unbounded directions are cut at
    /// `±clip`.
    pub fn grid(&self, resolution: f64, clip: f64) -> Result<Vec<Point>> {
        if self.dim() > 2 {
            return Err(Error::Unsupported(format!(
                "grid enumeration of a {}-dimensional set",
                self.dim()
            )));
        }
        if !(resolution > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid resolution {resolution}"
            )));
        }
        let (lo, hi) = self.bounding_box(clip);
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| axis_nodes(*l, *h, resolution))
            .collect();
        let mut out = Vec::new();
        match axes.len() {
            1 => {
                for a in &axes[0] {
                    let p = Point::from_slice(&[*a]);
                    if self.contains(&p, 1e-9) {
                        out.push(p);
                    }
                }
            }
            2 => {
                for a in &axes[0] {
                    for b in &axes[1] {
                        let p = Point::from_slice(&[*a, *b]);
                        if self.contains(&p, 1e-9) {
                            out.push(p);
                        }
                    }
                }
            }
            _ => {}
        }
        if out.is_empty() {
            out.push(
                self.project_unchecked(
                    &lo.iter()
                        .zip(&hi)
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect::<Vec<_>>(),
                ),
            );
        }
        Ok(out)
    }
}

fn axis_nodes(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let n = ((hi - lo) / h).ceil() as usize;
    (0..=n)
        .map(|k| if k == n { hi } else { lo + k as f64 * h })
        .collect()
}

fn project_ordered_box(r: f64, x: &[f64]) -> Point {
    let (a, b) = (x[0], x[1]);
    if a >= -r && b <= r && a <= b {
        return Point::from_slice(x);
    }
    // Nearest point among the three edges of the triangle.
    let left = [-r, b.clamp(-r, r)];
    let top = [a.clamp(-r, r), r];
    let t = (0.5 * (a + b)).clamp(-r, r);
    let diag = [t, t];
    let mut best = left;
    let mut best_d = dist(x, &left);
    for cand in [top, diag] {
        let d = dist(x, &cand);
        if d < best_d {
            best = cand;
            best_d = d;
        }
    }
    Point::from_slice(&best)
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn parse_list(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => t.parse::<f64>().map_err(|e| Error::Config {
                    key: key.to_string(),
                    message: format!("bad number `{t}`: {e}"),
                }),
            }
        })
        .collect()
}

/// Text descriptors used by config files and the CLI:
///
/// ```text
/// unconstrained:2      box:-1,-1;1,1      interval:0,1      cube:2;-1,1
/// ball:0,0;0.5         ordered:0.3        singleton:0,0     slab:free,zero
/// ```
impl FromStr for ConvexSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Config {
            key: s.to_string(),
            message: m.to_string(),
        };
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "unconstrained" => {
                let dim = if rest.is_empty() {
                    1
                } else {
                    rest.trim().parse().map_err(|_| bad("dimension"))?
                };
                Ok(ConvexSet::unconstrained(dim))
            }
            "interval" => {
                let v = parse_list(rest, s)?;
                if v.len() != 2 {
                    return Err(bad("interval needs lo,hi"));
                }
                ConvexSet::interval(v[0], v[1])
            }
            "cube" => {
                let (d, b) = rest
                    .split_once(';')
                    .ok_or_else(|| bad("cube needs dim;lo,hi"))?;
                let dim: usize = d.trim().parse().map_err(|_| bad("dimension"))?;
                let v = parse_list(b, s)?;
                if v.len() != 2 {
                    return Err(bad("cube needs lo,hi"));
                }
                ConvexSet::cube(dim, v[0], v[1])
            }
            "box" => {
                let (l, u) = rest
                    .split_once(';')
                    .ok_or_else(|| bad("box needs lower;upper"))?;
                ConvexSet::boxed(parse_list(l, s)?, parse_list(u, s)?)
            }
            "ball" => {
                let (c, r) = rest
                    .split_once(';')
                    .ok_or_else(|| bad("ball needs center;radius"))?;
                let r: f64 = r.trim().parse().map_err(|_| bad("radius"))?;
                ConvexSet::ball(parse_list(c, s)?, r)
            }
            "ordered" => {
                let r: f64 = rest.trim().parse().map_err(|_| bad("radius"))?;
                ConvexSet::ordered_box(r)
            }
            "singleton" => Ok(ConvexSet::singleton(parse_list(rest, s)?)),
            "slab" => {
                let free = rest
                    .split(',')
                    .map(|t| match t.trim() {
                        "free" => Ok(true),
                        "zero" => Ok(false),
                        _ => Err(bad("slab entries are `free` or `zero`")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ConvexSet::axis_slab(&free))
            }
            _ => Err(bad("unknown set kind")),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| {
            if *x == f64::INFINITY {
                "inf".to_string()
            } else if *x == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{x}")
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexSet::Unconstrained { dim } => write!(f, "unconstrained:{dim}"),
            ConvexSet::Box { lower, upper } => {
                write!(f, "box:{};{}", fmt_list(lower), fmt_list(upper))
            }
            ConvexSet::Ball { center, radius } => write!(f, "ball:{};{radius}", fmt_list(center)),
            ConvexSet::OrderedBox { radius } => write!(f, "ordered:{radius}"),
            ConvexSet::Singleton { point } => write!(f, "singleton:{}", fmt_list(point)),
        }
    }
}
