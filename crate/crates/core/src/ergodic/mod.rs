//! Markovian solutions of the ergodic equation
//!
//! ```text
//! ½Tr(κκᵀ∇²y) + η(v)ᵀ∇y + G(v, κᵀ∇y) = λ,   y(v₀) = 0,
//! ```
//!
//! by two independent routes (vanishing discount and false transient), and
//! the finite-horizon equation whose long-run behaviour they describe.
//! Grids cover one or two moving factor coordinates.

mod discretization;
mod field;
mod finite;
mod grid;
mod solve;

#[cfg(test)]
mod tests;

pub use discretization::PdeProblem;
pub use field::{
    extract_z, forward_process_value, DiscountedSolutionField, FieldSummary, ForwardValue,
    GradientField, MarkovianSolutionField, RhoTraceEntry, SolveMethod,
};
pub use finite::{
    discounted_forward_diagnostics, ergodic_limit, lower_value, solve_finite_horizon,
    solve_finite_horizon_with_terminal, DiscountedForwardReport, DiscountedForwardRow,
    ErgodicLimitReport, FiniteHorizonField, LimitRow, DEFAULT_STEPS,
};
pub use grid::{SpatialGrid, Stencil, MIN_NODES};
pub use solve::{
    solve_discounted, solve_ergodic_false_transient, solve_ergodic_false_transient_with,
    solve_ergodic_vanishing_discount, DEFAULT_MAX_STEPS, DEFAULT_RHO_SCHEDULE,
    DEFAULT_TRANSIENT_DT, DEFAULT_TRANSIENT_TOL, NEWTON_TOLERANCE,
};
