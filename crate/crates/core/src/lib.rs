//! Partition function and log-likelihood estimation for energy-based models
//! with Hamiltonian annealed importance sampling.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the bottom of this file fix the scalar for the common cases.
//!
//! ```
//! use hais_core::{run_chain, Config, Gaussian, Poe};
//! use hais_core::linalg::Matrix;
//!
//! let target = Poe::laplace(Matrix::identity(2)).unwrap();
//! let proposal = Gaussian::standard(2);
//! let est = run_chain(&proposal, &target, &Config::new(100, 16, 7)).unwrap();
//! assert!((est.log_z - 4f64.ln()).abs() < 0.5);
//! ```

pub mod anneal;
pub mod error;
pub mod kernel;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod scalar;

pub use anneal::{
    convergence_sweep, log_mean_exp, run_chain, trace_particle, Estimator, HaisConfig, LogZEstimate, Schedule,
    SweepRow,
};
pub use error::{HaisError, Result};
pub use kernel::{hais_transition, leapfrog, KernelConfig, PhasePoint};
pub use likelihood::{analysis_log_likelihood, generative_log_likelihood, Dataset, LikelihoodReport};
pub use model::params::{AnyModel, ModelFile};
pub use model::{
    BilinearGenerative, CoordinateBound, EnergyModel, Expert, GaussianReference, GenerativeModel, LinearGenerative,
    McRbm, PoeModel, Prior,
};
pub use scalar::Scalar;

pub type Poe = PoeModel<f64>;
pub type Poe32 = PoeModel<f32>;
pub type Mcrbm = McRbm<f64>;
pub type Mcrbm32 = McRbm<f32>;
pub type Gaussian = GaussianReference<f64>;
pub type Gaussian32 = GaussianReference<f32>;
pub type Linear = LinearGenerative<f64>;
pub type Linear32 = LinearGenerative<f32>;
pub type Bilinear = BilinearGenerative<f64>;
pub type Bilinear32 = BilinearGenerative<f32>;
pub type Config = HaisConfig<f64>;
pub type Config32 = HaisConfig<f32>;
pub type Estimate = LogZEstimate<f64>;
pub type Estimate32 = LogZEstimate<f32>;
pub type Data = Dataset<f64>;
pub type Data32 = Dataset<f32>;
