use crate::error::{HaisError, Result};
use crate::scalar::Scalar;

/// Mixing fractions `β_1..β_N` of the intermediate distributions.
///
/// `β_0 = 0` (the start distribution) is implicit; the last entry is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T> {
    betas: Vec<T>,
}

impl<T: Scalar> Schedule<T> {
    /// `β_n = n / N` for `n = 1..=N`.
    pub fn linear(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HaisError::param("n_distributions", "must be at least 1"));
        }
        let nf = n as f64;
        let mut betas: Vec<T> = (1..=n).map(|i| T::of(i as f64 / nf)).collect();
        betas[n - 1] = T::one();
        Ok(Self { betas })
    }

    /// A custom schedule; must be nondecreasing in `[0, 1]` and end at 1.
    pub fn from_betas(betas: Vec<T>) -> Result<Self> {
        let Some(&last) = betas.last() else {
            return Err(HaisError::param("betas", "schedule must not be empty"));
        };
        if last != T::one() {
            return Err(HaisError::param("betas", "final value must be exactly 1"));
        }
        let mut prev = T::zero();
        for &b in &betas {
            if !(b >= prev && b <= T::one()) {
                return Err(HaisError::param("betas", "values must be nondecreasing in [0, 1]"));
            }
            prev = b;
        }
        Ok(Self { betas })
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// `β_n`, with `β_0 = 0`.
    #[inline]
    pub fn beta(&self, n: usize) -> T {
        if n == 0 {
            T::zero()
        } else {
            self.betas[n - 1]
        }
    }
}

/// `E_πn = (1 - β) E_q + β E_p`.
#[inline]
pub fn intermediate_energy<T: Scalar>(beta: T, e_q: T, e_p: T) -> T {
    (T::one() - beta) * e_q + beta * e_p
}
