//! Single-step Hamiltonian transitions with persistent, partially refreshed
//! momentum.
//!
//! One transition is: one leapfrog step, a Metropolis accept/reject that
//! negates the momentum on acceptance, then a partial momentum refresh that
//! negates again. Lower bounds on coordinates are handled by mirror
//! reflection inside each position half-step.

use rand::Rng;

use crate::error::{HaisError, Result};
use crate::model::{CoordinateBound, EnergyModel};
use crate::scalar::{norm_sq, Scalar};

/// Position and momentum of one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint<T> {
    pub position: Vec<T>,
    pub momentum: Vec<T>,
}

impl<T: Scalar> PhasePoint<T> {
    pub fn new(position: Vec<T>, momentum: Vec<T>) -> Result<Self> {
        if position.len() != momentum.len() {
            return Err(HaisError::dims("momentum", position.len(), momentum.len()));
        }
        Ok(Self { position, momentum })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn kinetic_energy(&self) -> T {
        T::half() * norm_sq(&self.momentum)
    }

    /// `H(y) = E(x) + ½ vᵀv`
    pub fn hamiltonian<M: EnergyModel<T> + ?Sized>(&self, model: &M) -> T {
        model.energy(&self.position) + self.kinetic_energy()
    }
}

/// Leapfrog step size and momentum refresh fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T> {
    pub epsilon: T,
    pub gamma: T,
}

impl<T: Scalar> KernelConfig<T> {
    pub const DEFAULT_EPSILON: f64 = 0.2;

    pub fn new(epsilon: T, gamma: T) -> Result<Self> {
        let cfg = Self { epsilon, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Step size `epsilon` with [`half_power_gamma`].
    pub fn with_epsilon(epsilon: T) -> Result<Self> {
        Self::new(epsilon, half_power_gamma(epsilon))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > T::zero()) {
            return Err(HaisError::param("epsilon", "must be finite and positive"));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return Err(HaisError::param("gamma", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for KernelConfig<T> {
    fn default() -> Self {
        let eps = T::of(Self::DEFAULT_EPSILON);
        Self {
            epsilon: eps,
            gamma: half_power_gamma(eps),
        }
    }
}

/// Refresh fraction that randomizes half the momentum power per unit of
/// simulated time: `(1 - γ)^(1/ε) = ½`, i.e. `γ = 1 - 2^(-ε)`.
pub fn half_power_gamma<T: Scalar>(epsilon: T) -> T {
    T::one() - T::two().powf(-epsilon)
}

/// Reflects `x` back inside every bound, negating the matching momentum
/// coordinate for each reflection.
fn reflect<T: Scalar>(x: &mut [T], v: &mut [T], constraints: &[CoordinateBound<T>]) {
    if constraints.is_empty() {
        return;
    }
    // several bounds may share a coordinate; repeat until none is violated
    loop {
        let mut clean = true;
        for b in constraints {
            let i = b.index;
            if x[i] < b.lower {
                x[i] = b.lower + (b.lower - x[i]);
                v[i] = -v[i];
                clean = false;
            }
        }
        if clean {
            break;
        }
    }
}

/// `x ← x + h·v` followed by reflection.
pub fn position_half_step<T: Scalar>(
    x: &mut [T],
    v: &mut [T],
    h: T,
    constraints: &[CoordinateBound<T>],
) {
    for (xi, &vi) in x.iter_mut().zip(v.iter()) {
        *xi += h * vi;
    }
    reflect(x, v, constraints);
}

/// One leapfrog step of size `epsilon` under `model`'s energy.
pub fn leapfrog<T: Scalar, M: EnergyModel<T> + ?Sized>(
    y: &PhasePoint<T>,
    model: &M,
    epsilon: T,
    constraints: &[CoordinateBound<T>],
) -> Result<PhasePoint<T>> {
    let mut grad = vec![T::zero(); y.dim()];
    let mut out = y.clone();
    leapfrog_in_place(&mut out, model, epsilon, constraints, &mut grad)?;
    Ok(out)
}

pub(crate) fn leapfrog_in_place<T: Scalar, M: EnergyModel<T> + ?Sized>(
    y: &mut PhasePoint<T>,
    model: &M,
    epsilon: T,
    constraints: &[CoordinateBound<T>],
    grad: &mut [T],
) -> Result<()> {
    let h = T::half() * epsilon;
    position_half_step(&mut y.position, &mut y.momentum, h, constraints);
    model.gradient(&y.position, grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(HaisError::NonFiniteDynamics {
            position: y.position.iter().map(|v| v.as_f64()).collect(),
        });
    }
    for (v, &g) in y.momentum.iter_mut().zip(grad.iter()) {
        *v -= epsilon * g;
    }
    position_half_step(&mut y.position, &mut y.momentum, h, constraints);
    Ok(())
}

/// `min(1, exp(H0 - H1))`; a NaN proposal Hamiltonian has probability 0.
pub fn acceptance_probability<T: Scalar>(h0: T, h1: T) -> T {
    let delta = h0 - h1;
    if delta.is_nan() {
        T::zero()
    } else if delta >= T::zero() {
        T::one()
    } else {
        delta.exp()
    }
}

/// Metropolis test between the current point and a leapfrog proposal.
///
/// Returns `(x1, -v1)` on acceptance and `y0` otherwise, together with the
/// accept flag.
pub fn accept_reject<T: Scalar, M: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    y0: &PhasePoint<T>,
    y1: &PhasePoint<T>,
    model: &M,
    rng: &mut R,
) -> (PhasePoint<T>, bool) {
    let h0 = y0.hamiltonian(model);
    let h1 = y1.hamiltonian(model);
    if metropolis(h0, h1, rng) {
        let mut out = y1.clone();
        out.momentum.iter_mut().for_each(|v| *v = -*v);
        (out, true)
    } else {
        (y0.clone(), false)
    }
}

#[inline]
fn metropolis<T: Scalar, R: Rng + ?Sized>(h0: T, h1: T, rng: &mut R) -> bool {
    let p = acceptance_probability(h0, h1);
    // the draw is always taken so the random stream does not depend on p
    let u = T::unit_uniform(rng);
    u < p
}

/// `v ← -√(1-γ)·v + √γ·r` with `r ~ N(0, I)`; `γ = 0` is pure negation.
pub fn refresh_momentum<T: Scalar, R: Rng + ?Sized>(v: &[T], gamma: T, rng: &mut R) -> Vec<T> {
    let mut out = v.to_vec();
    refresh_in_place(&mut out, gamma, rng);
    out
}

pub(crate) fn refresh_in_place<T: Scalar, R: Rng + ?Sized>(v: &mut [T], gamma: T, rng: &mut R) {
    let keep = (T::one() - gamma).sqrt();
    let fresh = gamma.sqrt();
    if gamma == T::zero() {
        v.iter_mut().for_each(|vi| *vi = -*vi);
        return;
    }
    for vi in v.iter_mut() {
        *vi = -keep * *vi + fresh * T::std_normal(rng);
    }
}

/// Leapfrog, accept/reject and partial refresh, applied once.
pub fn hais_transition<T: Scalar, M: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    y: &PhasePoint<T>,
    model: &M,
    config: &KernelConfig<T>,
    constraints: &[CoordinateBound<T>],
    rng: &mut R,
) -> Result<(PhasePoint<T>, bool)> {
    let mut state = y.clone();
    let mut scratch = TransitionScratch::new(y.dim());
    let e0 = model.energy(&y.position);
    let accepted = transition_in_place(&mut state, e0, model, config, constraints, rng, &mut scratch)?;
    Ok((state, accepted))
}

/// Buffers reused across transitions of one particle.
#[derive(Debug, Clone)]
pub(crate) struct TransitionScratch<T> {
    proposal: PhasePoint<T>,
    grad: Vec<T>,
}

impl<T: Scalar> TransitionScratch<T> {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            proposal: PhasePoint {
                position: vec![T::zero(); dim],
                momentum: vec![T::zero(); dim],
            },
            grad: vec![T::zero(); dim],
        }
    }
}

/// In-place transition; `energy0` must equal `model.energy(&y.position)`.
pub(crate) fn transition_in_place<T: Scalar, M: EnergyModel<T> + ?Sized, R: Rng + ?Sized>(
    y: &mut PhasePoint<T>,
    energy0: T,
    model: &M,
    config: &KernelConfig<T>,
    constraints: &[CoordinateBound<T>],
    rng: &mut R,
    scratch: &mut TransitionScratch<T>,
) -> Result<bool> {
    let prop = &mut scratch.proposal;
    prop.position.copy_from_slice(&y.position);
    prop.momentum.copy_from_slice(&y.momentum);
    leapfrog_in_place(prop, model, config.epsilon, constraints, &mut scratch.grad)?;

    let h0 = energy0 + y.kinetic_energy();
    let h1 = model.energy(&prop.position) + prop.kinetic_energy();
    let accepted = metropolis(h0, h1, rng);
    if accepted {
        y.position.copy_from_slice(&prop.position);
        for (v, &p) in y.momentum.iter_mut().zip(&prop.momentum) {
            *v = -p;
        }
    }
    refresh_in_place(&mut y.momentum, config.gamma, rng);
    Ok(accepted)
}
