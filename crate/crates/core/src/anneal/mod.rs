//! Annealed importance sampling: schedules, particle chains and estimates.

mod chain;
mod estimate;
mod schedule;
mod sweep;

pub use chain::{run_chain, trace_particle, Estimator, HaisConfig, ParticleRun, ParticleTrace};
pub use estimate::{log_mean_exp, LogZEstimate};
pub use schedule::{intermediate_energy, Schedule};
pub use sweep::{convergence_sweep, sweep_seed, SweepRow, SWEEP_CSV_HEADER};
