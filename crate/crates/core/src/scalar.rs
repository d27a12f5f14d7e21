//! Floating point scalar abstraction shared by every model and sampler.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A real scalar the samplers can run on: `f32` or `f64`.
///
/// Beyond the `num_traits` arithmetic this carries the two random draws the
/// kernels need, so generic code never has to name a distribution bound.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// One draw from N(0, 1).
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw from U[0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$t>>::sample(&StandardNormal, rng)
            }

            #[inline]
            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Numerically stable `log(1 + e^z)`.
#[inline]
pub fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

/// Logistic sigmoid, the derivative of [`softplus`].
#[inline]
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Sign with `sign(0) = 0`; the subgradient used for `|u|` terms.
#[inline]
pub fn sign0<T: Scalar>(u: T) -> T {
    if u > T::zero() {
        T::one()
    } else if u < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert!((softplus(0.0f64) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0f64), 1000.0);
        assert!(softplus(-1000.0f64) >= 0.0);
        assert!(softplus(-1000.0f64) < 1e-300);
        assert!((softplus(3.0f32) - (1.0f32 + 3.0f32.exp()).ln()).abs() < 1e-6);
    }

    #[test]
    fn sigmoid_matches_softplus_derivative() {
        for &z in &[-30.0, -2.0, 0.0, 0.7, 40.0] {
            let h = 1e-6;
            let fd = (softplus(z + h) - softplus(z - h)) / (2.0 * h);
            assert!((fd - sigmoid(z)).abs() < 1e-8, "z={z}");
        }
    }
}
