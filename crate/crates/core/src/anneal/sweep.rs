use std::time::Instant;

use serde::Serialize;

use super::chain::{run_chain, Estimator, HaisConfig};
use crate::error::{HaisError, Result};
use crate::model::{EnergyModel, GaussianReference};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub n_distributions: usize,
    pub estimator: Estimator,
    pub repeat: usize,
    pub log_z: T,
    pub std_err: T,
    pub ess: T,
    /// Wall-clock time of the run.
    pub seconds: f64,
}

pub const SWEEP_CSV_HEADER: &str = "n_distributions,estimator,repeat,log_z,std_err,ess,seconds";

/// Seed used for one cell of a sweep.
pub fn sweep_seed(seed: u64, n: usize, estimator: Estimator, repeat: usize) -> u64 {
    derive_seed(seed, &[n as u64, estimator as u64, repeat as u64])
}

/// Runs every estimator at every N, `repeats` times each.
///
/// Rows come out ordered by (position in `n_list`, position in `estimators`,
/// repeat). `base` supplies particles, step size and the root seed.
pub fn convergence_sweep<T, M>(
    proposal: &GaussianReference<T>,
    target: &M,
    n_list: &[usize],
    estimators: &[Estimator],
    repeats: usize,
    base: &HaisConfig<T>,
) -> Result<Vec<SweepRow<T>>>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
{
    if n_list.is_empty() {
        return Err(HaisError::param("n_list", "need at least one N"));
    }
    if estimators.is_empty() {
        return Err(HaisError::param("estimators", "need at least one estimator"));
    }
    let mut rows = Vec::with_capacity(n_list.len() * estimators.len() * repeats);
    for &n in n_list {
        for &estimator in estimators {
            for repeat in 0..repeats {
                let cfg = HaisConfig {
                    n_distributions: n,
                    estimator,
                    seed: sweep_seed(base.seed, n, estimator, repeat),
                    schedule: None,
                    ..base.clone()
                };
                let start = Instant::now();
                let est = run_chain(proposal, target, &cfg)?;
                rows.push(SweepRow {
                    n_distributions: n,
                    estimator,
                    repeat,
                    log_z: est.log_z,
                    std_err: est.std_err,
                    ess: est.ess,
                    seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(rows)
}
