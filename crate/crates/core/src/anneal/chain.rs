use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::LogZEstimate;
use super::schedule::{intermediate_energy, Schedule};
use crate::error::{HaisError, Result};
use crate::kernel::{half_power_gamma, transition_in_place, KernelConfig, PhasePoint, TransitionScratch};
use crate::model::{CoordinateBound, EnergyModel, GaussianReference};
use crate::rng::particle_rng;
use crate::scalar::Scalar;

/// Transition kernel used between intermediate distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    /// One leapfrog step per distribution, momentum carried across all of them.
    #[serde(rename = "hais")]
    Hais,
    /// Gaussian random-walk Metropolis, one proposal per distribution.
    #[serde(rename = "ais-mh")]
    AisMh,
    /// One leapfrog step per distribution with momentum redrawn every time.
    #[serde(rename = "ais-hmc-reset")]
    AisHmcReset,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Hais, Estimator::AisMh, Estimator::AisHmcReset];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Hais => "hais",
            Estimator::AisMh => "ais-mh",
            Estimator::AisHmcReset => "ais-hmc-reset",
        }
    }

    fn uses_momentum(self) -> bool {
        !matches!(self, Estimator::AisMh)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = HaisError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                HaisError::param(
                    "estimator",
                    format!("unknown estimator `{s}`; valid names: hais, ais-mh, ais-hmc-reset"),
                )
            })
    }
}

/// Parameters of one annealing run.
#[derive(Debug, Clone, PartialEq)]
pub struct HaisConfig<T> {
    /// Number of intermediate distributions N.
    pub n_distributions: usize,
    pub n_particles: usize,
    pub epsilon: T,
    pub gamma: T,
    pub seed: u64,
    pub estimator: Estimator,
    /// Random-walk proposal std for [`Estimator::AisMh`].
    pub mh_sigma: T,
    /// Overrides the linear `β_n = n/N` spacing; its length replaces
    /// `n_distributions`.
    pub schedule: Option<Schedule<T>>,
}

impl<T: Scalar> Default for HaisConfig<T> {
    fn default() -> Self {
        let eps = T::of(KernelConfig::<T>::DEFAULT_EPSILON);
        Self {
            n_distributions: 1000,
            n_particles: 200,
            epsilon: eps,
            gamma: half_power_gamma(eps),
            seed: 0,
            estimator: Estimator::Hais,
            mh_sigma: T::of(0.1),
            schedule: None,
        }
    }
}

impl<T: Scalar> HaisConfig<T> {
    pub fn new(n_distributions: usize, n_particles: usize, seed: u64) -> Self {
        Self {
            n_distributions,
            n_particles,
            seed,
            ..Self::default()
        }
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    /// Sets ε and the matching half-power γ.
    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self.gamma = half_power_gamma(epsilon);
        self
    }

    pub fn kernel(&self) -> KernelConfig<T> {
        KernelConfig {
            epsilon: self.epsilon,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(HaisError::param("n_particles", "at least 2 particles are required"));
        }
        if self.schedule.is_none() && self.n_distributions == 0 {
            return Err(HaisError::param("n_distributions", "must be at least 1"));
        }
        if self.estimator.uses_momentum() {
            self.kernel().validate()?;
        }
        if self.estimator == Estimator::AisMh && !(self.mh_sigma > T::zero() && self.mh_sigma.is_finite()) {
            return Err(HaisError::param("mh_sigma", "must be finite and positive"));
        }
        Ok(())
    }

    pub fn resolved_schedule(&self) -> Result<Schedule<T>> {
        match &self.schedule {
            Some(s) => Ok(s.clone()),
            None => Schedule::linear(self.n_distributions),
        }
    }
}

/// `(1-β) E_q + β E_p` as an energy model, with a Gaussian start distribution.
struct Bridge<'a, T, M: ?Sized> {
    proposal: &'a GaussianReference<T>,
    target: &'a M,
    beta: T,
}

impl<T: Scalar, M: EnergyModel<T> + ?Sized> EnergyModel<T> for Bridge<'_, T, M> {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn energy(&self, x: &[T]) -> T {
        intermediate_energy(self.beta, self.proposal.energy(x), self.target.energy(x))
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        self.target.gradient(x, grad);
        let keep = T::one() - self.beta;
        for ((g, &xi), &s) in grad.iter_mut().zip(x).zip(self.proposal.scale()) {
            *g = self.beta * *g + keep * xi / (s * s);
        }
    }
}

/// Outcome of one particle's chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleRun<T> {
    pub log_weight: T,
    pub accepted: usize,
    pub transitions: usize,
}

/// Every state `y_1..y_N` visited by one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrace<T> {
    pub states: Vec<PhasePoint<T>>,
    pub log_weight: T,
}

fn merged_constraints<T: Scalar>(
    proposal: &GaussianReference<T>,
    target: &(impl EnergyModel<T> + ?Sized),
) -> Vec<CoordinateBound<T>> {
    let mut all: Vec<CoordinateBound<T>> = target.constraints().to_vec();
    for b in proposal.constraints() {
        if !all.contains(b) {
            all.push(*b);
        }
    }
    all
}

fn check_pair<T: Scalar, M: EnergyModel<T> + ?Sized>(
    proposal: &GaussianReference<T>,
    target: &M,
    config: &HaisConfig<T>,
) -> Result<()> {
    config.validate()?;
    if proposal.dim() != target.dim() {
        return Err(HaisError::dims("proposal dimension", target.dim(), proposal.dim()));
    }
    for b in target.constraints() {
        if b.index >= target.dim() {
            return Err(HaisError::param("constraints", format!("bound index {} out of range", b.index)));
        }
    }
    Ok(())
}

/// Runs one particle from a draw of `proposal` to `target`.
///
/// The log weight is accumulated as `Σ_n [E_{π_{n-1}}(x_n) - E_{π_n}(x_n)]`
/// with `π_0 = q` and `π_N = p`, with a transition leaving `π_n` invariant
/// between consecutive terms; `visit` sees every state `y_n`.
#[allow(clippy::too_many_arguments)]
fn run_particle<T, M, F>(
    proposal: &GaussianReference<T>,
    target: &M,
    config: &HaisConfig<T>,
    schedule: &Schedule<T>,
    constraints: &[CoordinateBound<T>],
    particle: usize,
    mut visit: F,
) -> Result<ParticleRun<T>>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
    F: FnMut(&PhasePoint<T>),
{
    let mut rng = particle_rng(config.seed, particle as u64);
    let dim = target.dim();
    let n_dist = schedule.len();
    let kernel = config.kernel();

    let position = proposal.sample(&mut rng);
    let momentum: Vec<T> = if config.estimator.uses_momentum() {
        (0..dim).map(|_| T::std_normal(&mut rng)).collect()
    } else {
        vec![T::zero(); dim]
    };
    let mut y = PhasePoint { position, momentum };
    let mut scratch = TransitionScratch::new(dim);
    let mut candidate = vec![T::zero(); dim];
    let mut log_w = T::zero();
    let mut accepted = 0usize;

    for n in 1..=n_dist {
        visit(&y);
        let e_q = proposal.energy(&y.position);
        let e_p = target.energy(&y.position);
        let beta = schedule.beta(n);
        log_w += (beta - schedule.beta(n - 1)) * (e_q - e_p);
        if n == n_dist {
            break;
        }
        let bridge = Bridge {
            proposal,
            target,
            beta,
        };
        let e_now = intermediate_energy(beta, e_q, e_p);
        let ok = match config.estimator {
            Estimator::Hais => transition_in_place(
                &mut y, e_now, &bridge, &kernel, constraints, &mut rng, &mut scratch,
            ),
            Estimator::AisHmcReset => {
                y.momentum.iter_mut().for_each(|v| *v = T::std_normal(&mut rng));
                transition_in_place(&mut y, e_now, &bridge, &kernel, constraints, &mut rng, &mut scratch)
            }
            Estimator::AisMh => Ok(random_walk_step(
                &mut y.position,
                &mut candidate,
                e_now,
                &bridge,
                config.mh_sigma,
                constraints,
                &mut rng,
            )),
        }
        .map_err(|e| HaisError::ChainFailure {
            particle,
            beta: beta.as_f64(),
            source: Box::new(e),
        })?;
        accepted += ok as usize;
    }

    Ok(ParticleRun {
        log_weight: log_w,
        accepted,
        transitions: n_dist - 1,
    })
}

fn random_walk_step<T: Scalar, M: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    x: &mut [T],
    candidate: &mut [T],
    energy0: T,
    model: &M,
    sigma: T,
    constraints: &[CoordinateBound<T>],
    rng: &mut R,
) -> bool {
    for (c, &xi) in candidate.iter_mut().zip(x.iter()) {
        *c = xi + sigma * T::std_normal(rng);
    }
    let u = T::unit_uniform(rng);
    // outside the support the target density is zero
    if constraints.iter().any(|b| !b.is_satisfied(candidate)) {
        return false;
    }
    let e1 = model.energy(candidate);
    if u < crate::kernel::acceptance_probability(energy0, e1) {
        x.copy_from_slice(candidate);
        true
    } else {
        false
    }
}

/// Estimates `log Z` of `target` by annealing from `proposal`.
///
/// Particles run in parallel on the current rayon pool; particle `i` always
/// uses random stream `i` of `config.seed`, so the output does not depend on
/// the thread count.
pub fn run_chain<T, M>(
    proposal: &GaussianReference<T>,
    target: &M,
    config: &HaisConfig<T>,
) -> Result<LogZEstimate<T>>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
{
    check_pair(proposal, target, config)?;
    let schedule = config.resolved_schedule()?;
    let constraints = merged_constraints(proposal, target);
    let results: Vec<Result<ParticleRun<T>>> = (0..config.n_particles)
        .into_par_iter()
        .map(|i| run_particle(proposal, target, config, &schedule, &constraints, i, |_| {}))
        .collect();
    // report the lowest failing particle whatever the scheduling
    let runs: Vec<ParticleRun<T>> = results.into_iter().collect::<Result<_>>()?;

    let transitions: usize = runs.iter().map(|r| r.transitions).sum();
    let accepted: usize = runs.iter().map(|r| r.accepted).sum();
    let rate = if transitions == 0 {
        T::one()
    } else {
        T::of(accepted as f64 / transitions as f64)
    };
    let log_z_q = proposal
        .analytic_log_z()
        .expect("Gaussian reference always has a normalizer");
    LogZEstimate::from_log_weights(runs.into_iter().map(|r| r.log_weight).collect(), log_z_q, rate)
}

/// Replays particle `particle` of [`run_chain`] and records every state.
pub fn trace_particle<T, M>(
    proposal: &GaussianReference<T>,
    target: &M,
    config: &HaisConfig<T>,
    particle: usize,
) -> Result<ParticleTrace<T>>
where
    T: Scalar,
    M: EnergyModel<T> + ?Sized,
{
    check_pair(proposal, target, config)?;
    let schedule = config.resolved_schedule()?;
    let constraints = merged_constraints(proposal, target);
    let mut states = Vec::with_capacity(schedule.len());
    let run = run_particle(proposal, target, config, &schedule, &constraints, particle, |y| {
        states.push(y.clone())
    })?;
    Ok(ParticleTrace {
        states,
        log_weight: run.log_weight,
    })
}
