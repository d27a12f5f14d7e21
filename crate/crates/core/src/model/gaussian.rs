use rand::Rng;

use super::{CoordinateBound, EnergyModel};
use crate::error::{HaisError, Result};
use crate::scalar::Scalar;

/// Axis-aligned zero-mean Gaussian, optionally folded onto `x_i >= 0` for a
/// subset of coordinates (a half-normal on those axes).
///
/// This is both the annealing start distribution and a target with a known
/// normalizer. With unit scales and no folded axes it is the standard normal
/// used for proposals and momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianReference<T> {
    scale: Vec<T>,
    bounds: Vec<CoordinateBound<T>>,
}

impl<T: Scalar> GaussianReference<T> {
    pub fn standard(dim: usize) -> Self {
        Self {
            scale: vec![T::one(); dim],
            bounds: Vec::new(),
        }
    }

    pub fn with_scale(scale: Vec<T>) -> Result<Self> {
        if scale.is_empty() {
            return Err(HaisError::param("scale", "dimension must be positive"));
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > T::zero())) {
            return Err(HaisError::param("scale", "entries must be finite and positive"));
        }
        Ok(Self {
            scale,
            bounds: Vec::new(),
        })
    }

    /// Restricts the listed coordinates to `[0, ∞)`, halving the mass on each.
    pub fn folded(mut self, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        for i in indices {
            if i >= self.scale.len() {
                return Err(HaisError::param(
                    "bounds",
                    format!("index {i} out of range for dim {}", self.scale.len()),
                ));
            }
            if !self.bounds.iter().any(|b| b.index == i) {
                self.bounds.push(CoordinateBound::nonnegative(i));
            }
        }
        self.bounds.sort_by_key(|b| b.index);
        Ok(self)
    }

    pub fn scale(&self) -> &[T] {
        &self.scale
    }

    /// Draws one state into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        for (o, &s) in out.iter_mut().zip(&self.scale) {
            *o = s * T::std_normal(rng);
        }
        for b in &self.bounds {
            out[b.index] = out[b.index].abs();
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let mut out = vec![T::zero(); self.scale.len()];
        self.sample_into(rng, &mut out);
        out
    }

    fn log_normalizer(&self) -> T {
        let d = T::of(self.scale.len() as f64);
        let mut lz = T::half() * d * (T::TAU()).ln();
        for &s in &self.scale {
            lz += s.ln();
        }
        lz - T::of(self.bounds.len() as f64) * T::LN_2()
    }
}

impl<T: Scalar> EnergyModel<T> for GaussianReference<T> {
    fn dim(&self) -> usize {
        self.scale.len()
    }

    fn energy(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.scale.len());
        let mut e = T::zero();
        for (&xi, &s) in x.iter().zip(&self.scale) {
            let z = xi / s;
            e += z * z;
        }
        T::half() * e
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        for ((g, &xi), &s) in grad.iter_mut().zip(x).zip(&self.scale) {
            *g = xi / (s * s);
        }
    }

    fn constraints(&self) -> &[CoordinateBound<T>] {
        &self.bounds
    }

    fn analytic_log_z(&self) -> Option<T> {
        Some(self.log_normalizer())
    }
}
