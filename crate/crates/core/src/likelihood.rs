//! Average test-set log likelihood.
//!
//! Analysis models need a single partition function estimate shared by every
//! datapoint. Generative models need one annealing run per datapoint, over
//! that datapoint's posterior on the auxiliary variables.

use rayon::prelude::*;
use serde::Serialize;

use crate::anneal::{run_chain, HaisConfig, LogZEstimate};
use crate::error::{HaisError, Result};
use crate::linalg::Matrix;
use crate::model::{posterior_model, EnergyModel, GaussianReference, GenerativeModel};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// Test data, one row per datapoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    samples: Matrix<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Matrix<T>) -> Result<Self> {
        if !samples.is_finite() {
            return Err(HaisError::Input("dataset contains non-finite values".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.samples.row(i)
    }

    pub fn samples(&self) -> &Matrix<T> {
        &self.samples
    }

    fn check_against(&self, model_dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(HaisError::Input("dataset is empty".into()));
        }
        if self.dim() != model_dim {
            return Err(HaisError::dims("data columns vs model dimension", model_dim, self.dim()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointLikelihood<T> {
    pub index: usize,
    pub log_likelihood: T,
    /// Annealing noise in the normalizer behind this value.
    pub std_err_logz: T,
    pub ess: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodReport<T> {
    /// Mean log likelihood over the datapoints that succeeded, in nats.
    pub mean_ll: T,
    /// `sd(per_point) / √|D|`
    pub std_err: T,
    pub points: Vec<PointLikelihood<T>>,
    /// The shared partition function estimate (analysis models only).
    pub log_z: Option<LogZEstimate<T>>,
    pub failures: Vec<PointFailure>,
}

impl<T: Scalar> LikelihoodReport<T> {
    fn assemble(
        points: Vec<PointLikelihood<T>>,
        log_z: Option<LogZEstimate<T>>,
        failures: Vec<PointFailure>,
    ) -> Self {
        let lls: Vec<T> = points.iter().map(|p| p.log_likelihood).collect();
        let (mean_ll, std_err) = mean_and_std_err(&lls);
        Self {
            mean_ll,
            std_err,
            points,
            log_z,
            failures,
        }
    }

    pub fn per_point(&self) -> Vec<T> {
        self.points.iter().map(|p| p.log_likelihood).collect()
    }
}

/// Mean and standard error of the mean (sample sd with n - 1).
fn mean_and_std_err<T: Scalar>(v: &[T]) -> (T, T) {
    if v.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::of(v.len() as f64);
    let mean = v.iter().copied().sum::<T>() / n;
    if v.len() < 2 {
        return (mean, T::zero());
    }
    let var = v.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    (mean, (var / n).sqrt())
}

/// `log p(x_i) = -E(x_i) - log Ẑ` with one annealing run for `Ẑ`.
pub fn analysis_log_likelihood<T, M>(
    model: &M,
    data: &Dataset<T>,
    config: &HaisConfig<T>,
) -> Result<LikelihoodReport<T>>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
{
    data.check_against(model.dim())?;
    let proposal = GaussianReference::standard(model.dim());
    let est = run_chain(&proposal, model, config)?;
    Ok(analysis_report_with_log_z(model, data, est))
}

/// Analysis likelihood report given an already computed normalizer.
pub fn analysis_report_with_log_z<T, M>(model: &M, data: &Dataset<T>, est: LogZEstimate<T>) -> LikelihoodReport<T>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
{
    let points = (0..data.len())
        .map(|i| PointLikelihood {
            index: i,
            log_likelihood: -model.energy(data.row(i)) - est.log_z,
            std_err_logz: est.std_err,
            ess: est.ess,
        })
        .collect();
    LikelihoodReport::assemble(points, Some(est), Vec::new())
}

/// Unit Gaussian over the auxiliaries, folded onto `[0, ∞)` on coordinates
/// bounded below by zero.
pub fn auxiliary_proposal<T: Scalar, G: GenerativeModel<T> + ?Sized>(
    model: &G,
) -> Result<GaussianReference<T>> {
    let cons = model.aux_constraints();
    if let Some(b) = cons.iter().find(|b| b.lower != T::zero()) {
        return Err(HaisError::param(
            "constraints",
            format!("auxiliary bound on coordinate {} is not at zero", b.index),
        ));
    }
    GaussianReference::standard(model.aux_dim()).folded(cons.iter().map(|b| b.index))
}

/// Seed of the chain for datapoint `index`.
pub fn datapoint_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, &[index as u64])
}

/// `log p(x_i) = log Z_{aux|x_i}`, one annealing run per datapoint.
///
/// A datapoint whose chain fails is listed in `failures` and left out of the
/// mean; only dimension and configuration problems abort the whole batch.
pub fn generative_log_likelihood<T, G>(
    model: &G,
    data: &Dataset<T>,
    config: &HaisConfig<T>,
) -> Result<LikelihoodReport<T>>
where
    T: Scalar,
    G: GenerativeModel<T> + ?Sized,
{
    data.check_against(model.data_dim())?;
    config.validate()?;
    let proposal = auxiliary_proposal(model)?;
    let outcomes: Vec<(usize, Result<LogZEstimate<T>>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let cfg = HaisConfig {
                seed: datapoint_seed(config.seed, i),
                ..config.clone()
            };
            let res = posterior_model(model, data.row(i))
                .and_then(|post| run_chain(&proposal, &post, &cfg));
            (i, res)
        })
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (index, res) in outcomes {
        match res {
            Ok(est) => points.push(PointLikelihood {
                index,
                log_likelihood: est.log_z,
                std_err_logz: est.std_err,
                ess: est.ess,
            }),
            Err(e) => failures.push(PointFailure {
                index,
                message: e.to_string(),
            }),
        }
    }
    Ok(LikelihoodReport::assemble(points, None, failures))
}
