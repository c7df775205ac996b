//! Discounted Newton solves, the vanishing-discount limit and false-transient
//! time marching.
//!
//! With `L` the discrete factor generator and `D` the discrete gradient, the
//! discounted problem is
//!
//! ```text
//! ρ y = L y + G(v, κᵀ D y)
//! ```
//!
//! and is solved by semi-smooth Newton with Jacobian `ρI − L − diag(∂G/∂z)κᵀD`.
//! The false-transient march treats `L` implicitly and `G` explicitly,
//!
//! ```text
//! (I/Δt − L) f⁽ⁿ⁺¹⁾ = f⁽ⁿ⁾/Δt + G(v, κᵀ D f⁽ⁿ⁾),
//! ```
//!
//! and stops once the increment `(f⁽ⁿ⁺¹⁾ − f⁽ⁿ⁾)/Δt` is spatially constant;
//! that constant is `λ`, and the steady profile solves the same discrete
//! ergodic equation the vanishing-discount limit approximates.

use super::discretization::{sup_norm, Discretization, PdeProblem};
use super::field::{
    extract_z, DiscountedSolutionField, MarkovianSolutionField, RhoTraceEntry, SolveMethod,
};
use super::grid::SpatialGrid;
use crate::drivers::Generator;
use crate::error::{Error, Result};
use crate::linalg::BandedLu;
use crate::sets::Point;

pub const DEFAULT_RHO_SCHEDULE: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
pub const NEWTON_TOLERANCE: f64 = 1e-8;
pub const NEWTON_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_TRANSIENT_DT: f64 = 0.01;
pub const DEFAULT_TRANSIENT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: usize = 400_000;
/// Relative slack before a non-monotone `ρ·y^ρ(v₀)` trajectory is reported.
const MONOTONICITY_SLACK: f64 = 1e-9;

/// Solves `ρ y = L y + G(v, κᵀ∇y)` on `grid`.
pub fn solve_discounted(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    rho: f64,
) -> Result<DiscountedSolutionField> {
    let disc = Discretization::new(problem.model, grid)?;
    solve_discounted_on(&disc, problem.generator, rho, None)
}

pub(crate) fn solve_discounted_on(
    disc: &Discretization,
    gen: &dyn Generator,
    rho: f64,
    start: Option<Vec<f64>>,
) -> Result<DiscountedSolutionField> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "discount rate must be positive, got {rho}"
        )));
    }
    let residual = |y: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
        let ly = disc.apply_linear(y);
        let (g, grad) = disc.generator(gen, y)?;
        let res = (0..disc.n).map(|k| rho * y[k] - ly[k] - g[k]).collect();
        Ok((res, grad))
    };
    let mut y = start.unwrap_or_else(|| vec![0.0; disc.n]);
    let (mut res, mut grad) = residual(&y)?;
    let mut norm = sup_norm(&res);
    let mut history = vec![norm];
    let mut iterations = 0;
    while norm > NEWTON_TOLERANCE {
        if iterations == NEWTON_MAX_ITERATIONS || !norm.is_finite() {
            return Err(Error::NonConvergence {
                solver: "discounted Newton",
                iterations,
                residual: norm,
                history,
            });
        }
        iterations += 1;
        let mut jac = disc
            .linear
            .combine(-1.0, &disc.linearized_generator(&grad), -1.0);
        jac.add_diagonal(rho);
        let mut step = res.clone();
        jac.solve(&mut step)?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(a, s)| a - scale * s).collect();
            let (r, g) = residual(&trial)?;
            let n = sup_norm(&r);
            if n < (1.0 - 1e-4 * scale) * norm || n <= NEWTON_TOLERANCE {
                accepted = Some((trial, r, g, n));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, r, g, n)) = accepted else {
            // A stalled line search at rounding level still counts as converged.
            if norm <= 100.0 * NEWTON_TOLERANCE {
                break;
            }
            return Err(Error::NonConvergence {
                solver: "discounted Newton",
                iterations,
                residual: norm,
                history,
            });
        };
        y = trial;
        res = r;
        grad = g;
        norm = n;
        history.push(norm);
    }
    let z = extract_z(&disc.grid, &y, &disc.kappa);
    Ok(DiscountedSolutionField {
        rho,
        grid: disc.grid.clone(),
        y,
        z,
        residual_norm: norm,
        iterations,
        residual_history: history,
    })
}

/// Ergodic solution as the limit of discounted solutions along `rho_schedule`.
///
/// `λ` and `y` are linearly extrapolated to `ρ = 0` from the last two entries:
///
/// ```text
/// λ ≈ (ρ₁a₂ − ρ₂a₁)/(ρ₁ − ρ₂),   aᵢ = ρᵢ y^{ρᵢ}(v₀)
/// ```
pub fn solve_ergodic_vanishing_discount(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    rho_schedule: &[f64],
    v0: &[f64],
) -> Result<MarkovianSolutionField> {
    validate_schedule(rho_schedule)?;
    check_anchor(grid, v0)?;
    let disc = Discretization::new(problem.model, grid)?;
    let gen = problem.generator;
    let mut trace = Vec::with_capacity(rho_schedule.len());
    let mut warnings = Vec::new();
    let mut solutions: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let mut start: Option<Vec<f64>> = None;
    for &rho in rho_schedule {
        let sol = solve_discounted_on(&disc, gen, rho, start.take())?;
        let (at_v0, _) = grid.interpolate(&sol.y, v0);
        trace.push(RhoTraceEntry {
            rho,
            scaled_value: rho * at_v0,
            newton_iterations: sol.iterations,
        });
        solutions.push((rho, sol.y, at_v0));
        if let Some(&next) = rho_schedule.get(trace.len()) {
            // y^ρ ≈ y + λ/ρ: keep the profile, rescale the level.
            let (prev_rho, prev_y, prev_v0) = solutions.last().unwrap();
            start = Some(
                prev_y
                    .iter()
                    .map(|y| y - prev_v0 + prev_rho * prev_v0 / next)
                    .collect(),
            );
        }
    }
    monotonicity_warnings(&trace, &mut warnings);
    let (lambda, y) = match solutions.as_slice() {
        [.., (r1, y1, c1), (r2, y2, c2)] => {
            let a1 = r1 * c1;
            let a2 = r2 * c2;
            let lambda = (r1 * a2 - r2 * a1) / (r1 - r2);
            let y: Vec<f64> = y1
                .iter()
                .zip(y2)
                .map(|(p, q)| (r1 * (q - c2) - r2 * (p - c1)) / (r1 - r2))
                .collect();
            (lambda, y)
        }
        [(r, y1, c)] => (r * c, y1.iter().map(|p| p - c).collect()),
        [] => unreachable!("schedule validated as non-empty"),
    };
    finish(
        &disc,
        gen,
        y,
        lambda,
        v0,
        SolveMethod::VanishingDiscount,
        trace,
        warnings,
    )
}

/// Ergodic solution by marching `f_t = Lf + G(v, κᵀ∇f)` from `f = 0` until
/// the increment's spatial oscillation is at most `tol`.
pub fn solve_ergodic_false_transient(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    dt: f64,
    tol: f64,
    v0: &[f64],
) -> Result<MarkovianSolutionField> {
    solve_ergodic_false_transient_with(problem, grid, dt, tol, v0, DEFAULT_MAX_STEPS)
}

pub fn solve_ergodic_false_transient_with(
    problem: PdeProblem<'_>,
    grid: &SpatialGrid,
    dt: f64,
    tol: f64,
    v0: &[f64],
    max_steps: usize,
) -> Result<MarkovianSolutionField> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_anchor(grid, v0)?;
    let disc = Discretization::new(problem.model, grid)?;
    let gen = problem.generator;
    let stepper = ImexStepper::new(&disc, dt)?;
    let mut f = vec![0.0; disc.n];
    let mut history = Vec::new();
    for step in 1..=max_steps {
        let next = stepper.step(gen, &f)?;
        let inc: Vec<f64> = next.iter().zip(&f).map(|(a, b)| (a - b) / dt).collect();
        let (lo, hi) = inc
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| {
                (l.min(*x), h.max(*x))
            });
        let spread = hi - lo;
        if !spread.is_finite() {
            return Err(Error::NonConvergence {
                solver: "false transient",
                iterations: step,
                residual: spread,
                history,
            });
        }
        let (anchor, _) = grid.interpolate(&next, v0);
        f = next.iter().map(|x| x - anchor).collect();
        if step % 100 == 0 {
            history.push(spread);
        }
        if spread <= tol {
            let lambda = inc.iter().sum::<f64>() / inc.len() as f64;
            return finish(
                &disc,
                gen,
                f,
                lambda,
                v0,
                SolveMethod::FalseTransient,
                Vec::new(),
                Vec::new(),
            );
        }
    }
    let residual = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        solver: "false transient",
        iterations: max_steps,
        residual,
        history,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    disc: &Discretization,
    gen: &dyn Generator,
    mut y: Vec<f64>,
    lambda: f64,
    v0: &[f64],
    method: SolveMethod,
    rho_trace: Vec<RhoTraceEntry>,
    warnings: Vec<String>,
) -> Result<MarkovianSolutionField> {
    let (anchor, _) = disc.grid.interpolate(&y, v0);
    for x in &mut y {
        *x -= anchor;
    }
    let residual_norm = sup_norm(&disc.ergodic_residual(gen, &y, lambda)?);
    let z = extract_z(&disc.grid, &y, &disc.kappa);
    Ok(MarkovianSolutionField {
        grid: disc.grid.clone(),
        y,
        z,
        lambda,
        v0: Point::from_slice(v0),
        method,
        residual_norm,
        rho_trace,
        warnings,
    })
}

/// One implicit-diffusion, explicit-generator step with a fixed factorization.
pub(crate) struct ImexStepper<'a> {
    disc: &'a Discretization,
    dt: f64,
    lu: BandedLu,
}

impl<'a> ImexStepper<'a> {
    pub fn new(disc: &'a Discretization, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let mut m = disc.linear.combine(-1.0, &disc.linear, 0.0);
        m.add_diagonal(1.0 / dt);
        Ok(Self {
            disc,
            dt,
            lu: m.factorize()?,
        })
    }

    /// Advances `f` by one step of the autonomous equation `f_s = Lf + G`,
    /// refusing steps that violate the convective stability bound.
    pub fn step(&self, gen: &dyn Generator, f: &[f64]) -> Result<Vec<f64>> {
        let (g, grad) = self.disc.generator(gen, f)?;
        let (bound, node) = self.disc.explicit_step_bound(&grad);
        if self.dt > bound {
            return Err(Error::StepSize {
                dt: self.dt,
                bound,
                node,
            });
        }
        let mut rhs: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a / self.dt + b).collect();
        self.lu.solve(&mut rhs);
        Ok(rhs)
    }
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty discount schedule".into()));
    }
    if schedule.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "discount rates must be positive: {schedule:?}"
        )));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "discount schedule must decrease: {schedule:?}"
        )));
    }
    let last = schedule[schedule.len() - 1];
    if last > 1e-2 {
        return Err(Error::InvalidParameter(format!(
            "last discount rate {last} exceeds 0.01"
        )));
    }
    Ok(())
}

fn check_anchor(grid: &SpatialGrid, v0: &[f64]) -> Result<()> {
    if v0.len() != grid.dim_factor() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim_factor(),
            got: v0.len(),
        });
    }
    if !grid.contains(v0) {
        return Err(Error::InvalidParameter(format!(
            "reference point {v0:?} lies outside the grid"
        )));
    }
    Ok(())
}

fn monotonicity_warnings(trace: &[RhoTraceEntry], warnings: &mut Vec<String>) {
    let diffs: Vec<f64> = trace
        .windows(2)
        .map(|w| w[1].scaled_value - w[0].scaled_value)
        .collect();
    let scale = trace
        .iter()
        .fold(1e-12_f64, |m, e| m.max(e.scaled_value.abs()));
    let slack = MONOTONICITY_SLACK * scale;
    let up = diffs.iter().any(|d| *d > slack);
    let down = diffs.iter().any(|d| *d < -slack);
    if up && down {
        warnings.push(format!(
            "rho*y_rho(v0) is not monotone along the schedule: {:?}",
            trace.iter().map(|e| e.scaled_value).collect::<Vec<_>>()
        ));
    }
}
