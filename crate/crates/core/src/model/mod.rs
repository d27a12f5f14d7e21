//! Energy-based models and the contract the samplers run against.
//!
//! A model defines an unnormalized density `exp(-E(x))` over `x ∈ ℝ^dim`.
//! Analysis models ([`PoeModel`], [`McRbm`], [`GaussianReference`]) implement
//! [`EnergyModel`] directly. Generative models ([`LinearGenerative`],
//! [`BilinearGenerative`]) implement [`GenerativeModel`] and expose, for each
//! datapoint, a [`Posterior`] energy over their auxiliary variables whose
//! normalizer is the datapoint's likelihood.

mod gaussian;
mod generative;
mod mcrbm;
pub mod params;
mod poe;

pub use gaussian::GaussianReference;
pub use generative::{
    posterior_model, BilinearGenerative, GenerativeModel, LinearGenerative, Posterior, Prior,
};
pub use mcrbm::{mcrbm_energy, McRbm};
pub use poe::{poe_energy, Expert, PoeModel};

use serde::{Deserialize, Serialize};

use crate::error::{HaisError, Result};
use crate::scalar::Scalar;

/// Inclusive lower bound `x[index] >= lower` on one state coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordinateBound<T> {
    pub index: usize,
    pub lower: T,
}

impl<T: Scalar> CoordinateBound<T> {
    pub fn nonnegative(index: usize) -> Self {
        Self {
            index,
            lower: T::zero(),
        }
    }

    #[inline]
    pub fn is_satisfied(&self, x: &[T]) -> bool {
        x[self.index] >= self.lower
    }
}

/// An unnormalized density `exp(-energy(x))` with an analytic gradient.
///
/// `energy` and `gradient` assume `x.len() == self.dim()`; use
/// [`EnergyModel::checked_energy`] at API boundaries. Implementations hold no
/// interior mutability, so a model may be shared freely across threads.
pub trait EnergyModel<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn energy(&self, x: &[T]) -> T;

    /// Writes `∂E/∂x` into `grad`.
    fn gradient(&self, x: &[T], grad: &mut [T]);

    fn constraints(&self) -> &[CoordinateBound<T>] {
        &[]
    }

    /// `log ∫ exp(-E(x)) dx` when it is known in closed form.
    fn analytic_log_z(&self) -> Option<T> {
        None
    }

    fn checked_energy(&self, x: &[T]) -> Result<T> {
        check_dim("state vector", self.dim(), x.len())?;
        Ok(self.energy(x))
    }

    fn gradient_vec(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); x.len()];
        self.gradient(x, &mut g);
        g
    }
}

impl<T: Scalar, M: EnergyModel<T> + ?Sized> EnergyModel<T> for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[T]) -> T {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[T], grad: &mut [T]) {
        (**self).gradient(x, grad)
    }
    fn constraints(&self) -> &[CoordinateBound<T>] {
        (**self).constraints()
    }
    fn analytic_log_z(&self) -> Option<T> {
        (**self).analytic_log_z()
    }
}

impl<T: Scalar, M: EnergyModel<T> + ?Sized> EnergyModel<T> for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn energy(&self, x: &[T]) -> T {
        (**self).energy(x)
    }
    fn gradient(&self, x: &[T], grad: &mut [T]) {
        (**self).gradient(x, grad)
    }
    fn constraints(&self) -> &[CoordinateBound<T>] {
        (**self).constraints()
    }
    fn analytic_log_z(&self) -> Option<T> {
        (**self).analytic_log_z()
    }
}

/// Closed-form log normalizer of `model`, if one exists.
pub fn analytic_log_z<T: Scalar, M: EnergyModel<T> + ?Sized>(model: &M) -> Option<T> {
    model.analytic_log_z()
}

pub(crate) fn check_dim(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(HaisError::dims(what, expected, found));
    }
    Ok(())
}

/// Worst relative error between the analytic gradient and central
/// differences with step `h` per coordinate.
///
/// The relative error per coordinate is `|g - fd| / max(1, |g|, |fd|)`; the
/// floor keeps near-zero components from dominating.
pub fn gradient_check<M: EnergyModel<f64> + ?Sized>(model: &M, x: &[f64], h: f64) -> f64 {
    let g = model.gradient_vec(x);
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let ep = model.energy(&xp);
        xp[i] = x[i] - h;
        let em = model.energy(&xp);
        xp[i] = x[i];
        let fd = (ep - em) / (2.0 * h);
        let scale = 1.0f64.max(g[i].abs()).max(fd.abs());
        worst = worst.max((g[i] - fd).abs() / scale);
    }
    worst
}
