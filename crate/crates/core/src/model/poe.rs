use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{check_dim, EnergyModel};
use crate::error::{HaisError, Result};
use crate::linalg::{log_abs_det, Matrix};
use crate::scalar::{sign0, Scalar};

/// One-dimensional expert energy applied to each filter response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expert {
    /// `λ |u|`
    Laplace,
    /// `λ log(1 + u²)`
    StudentT,
}

impl Expert {
    #[inline]
    fn energy<T: Scalar>(self, u: T, lambda: T) -> T {
        match self {
            Expert::Laplace => lambda * u.abs(),
            Expert::StudentT => lambda * (u * u).ln_1p(),
        }
    }

    #[inline]
    fn derivative<T: Scalar>(self, u: T, lambda: T) -> T {
        match self {
            Expert::Laplace => lambda * sign0(u),
            Expert::StudentT => lambda * T::two() * u / (T::one() + u * u),
        }
    }
}

/// Product of experts: `E(x) = Σ_l E_expert(Φ_l · x; λ_l)`.
///
/// `phi` is L×M (one filter per row). Laplace experts carry unit weights, the
/// filter norm plays the role of the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PoeModel<T> {
    phi: Matrix<T>,
    lambda: Vec<T>,
    expert: Expert,
}

impl<T: Scalar> PoeModel<T> {
    pub fn new(phi: Matrix<T>, lambda: Vec<T>, expert: Expert) -> Result<Self> {
        if phi.rows() == 0 || phi.cols() == 0 {
            return Err(HaisError::param("phi", "must have at least one row and column"));
        }
        if !phi.is_finite() {
            return Err(HaisError::param("phi", "entries must be finite"));
        }
        check_dim("lambda length", phi.rows(), lambda.len())?;
        if lambda.iter().any(|l| !(l.is_finite() && *l > T::zero())) {
            return Err(HaisError::param("lambda", "weights must be finite and positive"));
        }
        if expert == Expert::Laplace && lambda.iter().any(|&l| l != T::one()) {
            return Err(HaisError::param(
                "lambda",
                "Laplace experts use unit weights; rescale the rows of phi instead",
            ));
        }
        Ok(Self {
            phi,
            lambda,
            expert,
        })
    }

    pub fn laplace(phi: Matrix<T>) -> Result<Self> {
        let l = phi.rows();
        Self::new(phi, vec![T::one(); l], Expert::Laplace)
    }

    pub fn student_t(phi: Matrix<T>, lambda: Vec<T>) -> Result<Self> {
        Self::new(phi, lambda, Expert::StudentT)
    }

    pub fn phi(&self) -> &Matrix<T> {
        &self.phi
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn expert(&self) -> Expert {
        self.expert
    }

    pub fn n_experts(&self) -> usize {
        self.phi.rows()
    }

    /// Closed-form normalizer for complete models (square, invertible `phi`).
    ///
    /// Substituting `u = Φx` makes the integral separable:
    /// `log Z = Σ_l log ∫ exp(-E_expert(u; λ_l)) du - log|det Φ|`.
    fn complete_log_z(&self) -> Option<T> {
        if self.phi.rows() != self.phi.cols() {
            return None;
        }
        let log_det = log_abs_det(&self.phi.to_nalgebra())?;
        let per_expert = match self.expert {
            Expert::Laplace => self.lambda.len() as f64 * std::f64::consts::LN_2,
            Expert::StudentT => {
                let mut s = 0.0;
                for l in &self.lambda {
                    let l = l.as_f64();
                    if l <= 0.5 {
                        return None;
                    }
                    s += 0.5 * std::f64::consts::PI.ln() + ln_gamma(l - 0.5) - ln_gamma(l);
                }
                s
            }
        };
        Some(T::of(per_expert - log_det))
    }
}

/// Checked energy of a product of experts.
pub fn poe_energy<T: Scalar>(model: &PoeModel<T>, x: &[T]) -> Result<T> {
    model.checked_energy(x)
}

impl<T: Scalar> EnergyModel<T> for PoeModel<T> {
    fn dim(&self) -> usize {
        self.phi.cols()
    }

    fn energy(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        let mut e = T::zero();
        for (l, &lam) in self.lambda.iter().enumerate() {
            let u = crate::scalar::dot(self.phi.row(l), x);
            e += self.expert.energy(u, lam);
        }
        e
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        grad.iter_mut().for_each(|g| *g = T::zero());
        for (l, &lam) in self.lambda.iter().enumerate() {
            let row = self.phi.row(l);
            let u = crate::scalar::dot(row, x);
            let d = self.expert.derivative(u, lam);
            if d == T::zero() {
                continue;
            }
            for (g, &p) in grad.iter_mut().zip(row) {
                *g += d * p;
            }
        }
    }

    fn analytic_log_z(&self) -> Option<T> {
        self.complete_log_z()
    }
}
