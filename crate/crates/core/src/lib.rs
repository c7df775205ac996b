//! Worst-case forward utilities driven by an ergodic market factor.
//!
//! An investor with homothetic preferences trades in a market whose
//! coefficients depend on an ergodic factor
//!
//! ```text
//! dV = η(V) dt + κ dW,      dX = X πᵀ (θ(V) dt + dW),
//! ```
//!
//! while nature picks a scenario `u ∈ U` that shifts the Brownian drift.
//! The forward performance process `U(x, t) = (x^δ/δ) exp(y(V_t) − λt)` is
//! built from the Markovian solution `(y, z, λ)` of the ergodic equation
//!
//! ```text
//! ½ Tr(κκᵀ ∇²y) + ηᵀ∇y + G(v, κᵀ∇y) = λ,
//! ```
//!
//! where `G` is the max-min value of the pointwise game Hamiltonian.
//!
//! Layout:
//! * [`sets`], [`market`]: constraint sets, factor models, path simulation.
//! * [`drivers`]: Hamiltonians, drivers and the four strategy maps.
//! * [`ergodic`]: finite-difference ergodic, discounted and finite-horizon solvers.
//! * [`verification`]: Monte Carlo and brute-force checks of the structural claims.

// `!(x > 0.0)` also rejects NaN; index loops mirror the stencil algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod drivers;
pub mod ergodic;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod linalg;
pub mod market;
pub mod rng;
pub mod sets;
pub mod verification;

pub use error::{Error, Result};
pub use exec::Backend;
pub use sets::{ConvexSet, Point};
