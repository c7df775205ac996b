//! The factor market: coefficients, assumption checks, measure shifts and
//! path simulation.

pub mod fields;
pub mod model;
pub mod shift;
pub mod simulate;

pub use fields::{MatrixField, VectorField};
pub use model::{
    validate_assumptions, well_posedness_threshold, AdmissibilityReport, FactorModel, ModelBounds,
};
pub use shift::{ConstantFeedback, Feedback, FnFeedback, MeasureShift, SharedFeedback};
pub use simulate::{
    simulate_factor, simulate_paths_with, simulate_wealth, step_factor, PathEnsemble,
    SimulationConfig, StepView,
};
