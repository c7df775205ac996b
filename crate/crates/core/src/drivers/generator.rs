//! Generators of the ergodic equation: anything that yields `G(v, z)` and
//! `∂G/∂z`. The solvers only see this trait, so drivers can be shifted,
//! penalized or frozen for the comparison experiments.

use std::sync::Arc;

use super::{DriverSpec, UtilityClass, Variant};
use crate::error::{check_dim, Result};
use crate::market::Feedback;

pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;

    /// Returns `G(v, z)` and writes `∂G/∂z` into `grad`.
    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn value(&self, v: &[f64], z: &[f64]) -> Result<f64> {
        let mut g = vec![0.0; self.dim()];
        self.value_and_gradient(v, z, &mut g)
    }
}

impl Generator for DriverSpec {
    fn dim(&self) -> usize {
        DriverSpec::dim(self)
    }

    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let e = self.evaluate(v, z)?;
        grad.copy_from_slice(&e.grad_z);
        Ok(e.g)
    }
}

impl<T: Generator + ?Sized> Generator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        (**self).value_and_gradient(v, z, grad)
    }
}

/// `G ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantGenerator {
    pub dim: usize,
    pub value: f64,
}

impl Generator for ConstantGenerator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, _v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        check_dim(self.dim, z.len())?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        Ok(self.value)
    }
}

/// `G + c`.
pub struct Shifted<G> {
    pub inner: G,
    pub shift: f64,
}

impl<G: Generator> Generator for Shifted<G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        Ok(self.inner.value_and_gradient(v, z, grad)? + self.shift)
    }
}

/// `G − w·min(|z|², 1)`, a generator dominated by `G` that differs from it
/// away from `z = 0`.
pub struct ZPenalized<G> {
    pub inner: G,
    pub weight: f64,
}

impl<G: Generator> Generator for ZPenalized<G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let g = self.inner.value_and_gradient(v, z, grad)?;
        let zz: f64 = z.iter().map(|x| x * x).sum();
        if zz < 1.0 {
            for (gr, zi) in grad.iter_mut().zip(z) {
                *gr -= 2.0 * self.weight * zi;
            }
        }
        Ok(g - self.weight * zz.min(1.0))
    }
}

/// `sup_π F(v, z, π, u(v))` for a fixed scenario feedback `u`: the
/// investor's value when nature is committed to `u`. Dominates `G`.
pub struct FrozenScenario {
    pub spec: DriverSpec,
    pub scenario: Arc<dyn Feedback>,
}

impl Generator for FrozenScenario {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value_and_gradient(&self, v: &[f64], z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let d = self.spec.dim();
        check_dim(d, z.len())?;
        let mut u = vec![0.0; d];
        self.scenario.eval(v, &mut u);
        let u = self.spec.u_set().project_unchecked(&u);
        let theta = self.spec.theta(v);
        let a = self.spec.alpha_unchecked(&theta, z, &u);
        for i in 0..d {
            grad[i] = if self.spec.variant() == Variant::Section7 {
                u[i]
            } else {
                match self.spec.utility() {
                    UtilityClass::Power { delta } => delta * a[i] + u[i] + z[i],
                    UtilityClass::Log => u[i],
                    UtilityClass::Exponential { gamma } => z[i] - gamma * a[i] + u[i],
                }
            };
        }
        Ok(self.spec.f_unchecked(&theta, z, &a, &u))
    }
}
