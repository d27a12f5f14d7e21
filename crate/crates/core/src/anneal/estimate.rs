use serde::{Deserialize, Serialize};

use crate::error::{HaisError, Result};
use crate::scalar::Scalar;

/// `log((1/n) Σ exp(v_i))`, shifted by the maximum so it never overflows.
pub fn log_mean_exp<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(HaisError::param("values", "log-mean-exp of an empty slice"));
    }
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || max == T::infinity() {
        return Ok(max);
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    Ok(max + sum.ln() - T::of(values.len() as f64).ln())
}

/// Estimated log partition function from a set of weighted particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogZEstimate<T> {
    pub log_z: T,
    /// Delta-method standard error of `log_z`.
    pub std_err: T,
    /// `(Σw)² / Σw²`
    pub ess: T,
    /// Per-particle log weights, without the start distribution's `log Z_q`.
    pub particle_log_weights: Vec<T>,
    /// Fraction of accepted moves over all particles and transitions.
    pub acceptance_rate: T,
}

impl<T: Scalar> LogZEstimate<T> {
    /// Aggregates particle log weights; needs at least two particles.
    pub fn from_log_weights(log_weights: Vec<T>, log_z_q: T, acceptance_rate: T) -> Result<Self> {
        let n = log_weights.len();
        if n < 2 {
            return Err(HaisError::param("n_particles", "at least 2 particles are required"));
        }
        let lme = log_mean_exp(&log_weights)?;
        let (std_err, ess) = weight_statistics(&log_weights);
        Ok(Self {
            log_z: lme + log_z_q,
            std_err,
            ess,
            particle_log_weights: log_weights,
            acceptance_rate,
        })
    }
}

/// Standard error of `log mean w` and effective sample size, computed on
/// weights rescaled by their maximum.
fn weight_statistics<T: Scalar>(log_weights: &[T]) -> (T, T) {
    let n = log_weights.len();
    let max = log_weights.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return (T::nan(), T::one());
    }
    let w: Vec<T> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let nf = T::of(n as f64);
    let sum: T = w.iter().copied().sum();
    let sum_sq: T = w.iter().map(|&v| v * v).sum();
    let mean = sum / nf;
    let var = w.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::of((n - 1) as f64);
    let std_err = var.sqrt() / (nf.sqrt() * mean);
    let ess = (sum * sum / sum_sq).min(nf).max(T::one());
    (std_err, ess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_mean_exp_examples() {
        assert_eq!(log_mean_exp(&[0.0, 0.0]).unwrap(), 0.0);
        let v = log_mean_exp(&[0.0, 3f64.ln()]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_mean_exp(&[1000.0, 1000.0]).unwrap(), 1000.0);
        assert!(log_mean_exp::<f64>(&[]).is_err());
    }

    #[test]
    fn equal_weights_give_full_ess_and_zero_error() {
        let e = LogZEstimate::from_log_weights(vec![-3.0f64; 50], 1.5, 1.0).unwrap();
        assert_eq!(e.ess, 50.0);
        assert_eq!(e.std_err, 0.0);
        assert!((e.log_z - (-1.5)).abs() < 1e-14);
    }

    #[test]
    fn one_dominant_weight_has_unit_ess() {
        let e = LogZEstimate::from_log_weights(vec![0.0f64, -1e4, -1e4], 0.0, 1.0).unwrap();
        assert!((e.ess - 1.0).abs() < 1e-12);
    }

    #[test]
    fn needs_two_particles() {
        assert!(LogZEstimate::from_log_weights(vec![0.0], 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn ess_is_bounded(ws in proptest::collection::vec(-50.0f64..50.0, 2..40)) {
            let n = ws.len() as f64;
            let e = LogZEstimate::from_log_weights(ws, 0.0, 1.0).unwrap();
            prop_assert!(e.ess >= 1.0 && e.ess <= n);
        }

        #[test]
        fn log_mean_exp_is_shift_equivariant(ws in proptest::collection::vec(-30.0f64..30.0, 1..20), c in -500.0f64..500.0) {
            let base = log_mean_exp(&ws).unwrap();
            let shifted: Vec<f64> = ws.iter().map(|v| v + c).collect();
            prop_assert!((log_mean_exp(&shifted).unwrap() - base - c).abs() < 1e-9);
        }

        #[test]
        fn log_mean_exp_matches_direct_sum(ws in proptest::collection::vec(-20.0f64..20.0, 1..20)) {
            let direct = (ws.iter().map(|v| v.exp()).sum::<f64>() / ws.len() as f64).ln();
            prop_assert!((log_mean_exp(&ws).unwrap() - direct).abs() < 1e-10);
        }
    }
}
