use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, CoordinateBound, EnergyModel};
use crate::error::{HaisError, Result};
use crate::linalg::Matrix;
use crate::scalar::{sign0, Scalar};

/// Prior over the coefficients of a [`LinearGenerative`] model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    /// `a ~ N(0, I)`
    Gaussian,
    /// `p(a) = Π_i exp(-|a_i|) / 2`
    Laplace,
}

/// A directed model `p(x, aux) = p(x | Φ a(aux)) p(aux)` with isotropic
/// Gaussian observation noise.
///
/// The per-datapoint likelihood `p(x) = ∫ p(x, aux) d aux` is the normalizer of
/// [`Posterior`], which is what the annealing engine estimates.
pub trait GenerativeModel<T: Scalar>: Send + Sync {
    /// Data dimension M.
    fn data_dim(&self) -> usize;

    /// Auxiliary (latent) dimension.
    fn aux_dim(&self) -> usize;

    fn aux_constraints(&self) -> Vec<CoordinateBound<T>>;

    /// The M×L basis.
    fn phi(&self) -> &Matrix<T>;

    fn sigma_n(&self) -> T;

    /// Coefficients `a` (length L) produced by the auxiliary state.
    fn coefficients(&self, aux: &[T]) -> Vec<T>;

    /// Adds `(∂a/∂aux)ᵀ · d_coeff` to `grad`.
    fn pull_back(&self, aux: &[T], d_coeff: &[T], grad: &mut [T]);

    /// `-log p(aux)`, normalizer included.
    fn prior_energy(&self, aux: &[T]) -> T;

    /// Writes `∂/∂aux` of [`GenerativeModel::prior_energy`] into `grad`.
    fn prior_gradient(&self, aux: &[T], grad: &mut [T]);

    /// Draws `(x, aux)` from the joint.
    fn sample_joint(&self, rng: &mut dyn rand::RngCore) -> (Vec<T>, Vec<T>);

    /// Exact `log p(x)` where it is tractable.
    ///
    /// The default covers `Φ = 0`, where `x` is independent of the auxiliaries
    /// and the marginal is `N(0, σ_n² I)` whatever the prior.
    fn exact_log_marginal(&self, x: &[T]) -> Option<T> {
        if self.phi().is_zero() {
            Some(zero_basis_log_likelihood(x, self.sigma_n()))
        } else {
            None
        }
    }
}

/// `log N(x; 0, σ² I)`.
pub fn zero_basis_log_likelihood<T: Scalar>(x: &[T], sigma_n: T) -> T {
    let m = T::of(x.len() as f64);
    -T::half() * m * T::TAU().ln()
        - m * sigma_n.ln()
        - crate::scalar::norm_sq(x) / (T::two() * sigma_n * sigma_n)
}

fn validate_basis<T: Scalar>(phi: &Matrix<T>, sigma_n: T) -> Result<()> {
    if phi.rows() == 0 || phi.cols() == 0 {
        return Err(HaisError::param("phi", "must have at least one row and column"));
    }
    if !phi.is_finite() {
        return Err(HaisError::param("phi", "entries must be finite"));
    }
    if !(sigma_n.is_finite() && sigma_n > T::zero()) {
        return Err(HaisError::param("sigma_n", "must be finite and positive"));
    }
    Ok(())
}

fn sample_laplace<T: Scalar>(rng: &mut dyn rand::RngCore) -> T {
    let e = sample_exponential::<T>(rng);
    if rng.random::<bool>() {
        e
    } else {
        -e
    }
}

fn sample_exponential<T: Scalar>(rng: &mut dyn rand::RngCore) -> T {
    // 1 - U lies in (0, 1]
    -(T::one() - T::unit_uniform(rng)).ln()
}

fn observe<T: Scalar>(phi: &Matrix<T>, a: &[T], sigma_n: T, rng: &mut dyn rand::RngCore) -> Vec<T> {
    let mut x = phi.mul_vec(a);
    for xi in &mut x {
        *xi += sigma_n * T::std_normal(rng);
    }
    x
}

/// Linear generative model `x = Φa + σ_n ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerative<T> {
    phi: Matrix<T>,
    sigma_n: T,
    prior: Prior,
}

impl<T: Scalar> LinearGenerative<T> {
    pub const DEFAULT_SIGMA_N: f64 = 0.1;

    pub fn new(phi: Matrix<T>, sigma_n: T, prior: Prior) -> Result<Self> {
        validate_basis(&phi, sigma_n)?;
        Ok(Self {
            phi,
            sigma_n,
            prior,
        })
    }

    pub fn prior(&self) -> Prior {
        self.prior
    }

    /// Same basis and noise under a different prior.
    pub fn with_prior(&self, prior: Prior) -> Self {
        Self {
            prior,
            ..self.clone()
        }
    }

    /// Exact `log N(x; 0, ΦΦᵀ + σ_n² I)` for the Gaussian prior.
    fn gaussian_marginal(&self, x: &[T]) -> Option<f64> {
        let m = self.phi.rows();
        let phi = self.phi.to_nalgebra();
        let s2 = self.sigma_n.as_f64().powi(2);
        let cov = &phi * phi.transpose() + DMatrix::identity(m, m) * s2;
        let chol = cov.cholesky()?;
        let xv = DVector::from_iterator(m, x.iter().map(|v| v.as_f64()));
        let z = chol.l().solve_lower_triangular(&xv)?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Some(-0.5 * (m as f64 * std::f64::consts::TAU.ln() + log_det + z.norm_squared()))
    }
}

impl<T: Scalar> GenerativeModel<T> for LinearGenerative<T> {
    fn data_dim(&self) -> usize {
        self.phi.rows()
    }

    fn aux_dim(&self) -> usize {
        self.phi.cols()
    }

    fn aux_constraints(&self) -> Vec<CoordinateBound<T>> {
        Vec::new()
    }

    fn phi(&self) -> &Matrix<T> {
        &self.phi
    }

    fn sigma_n(&self) -> T {
        self.sigma_n
    }

    fn coefficients(&self, aux: &[T]) -> Vec<T> {
        aux.to_vec()
    }

    fn pull_back(&self, _aux: &[T], d_coeff: &[T], grad: &mut [T]) {
        for (g, &d) in grad.iter_mut().zip(d_coeff) {
            *g += d;
        }
    }

    fn prior_energy(&self, aux: &[T]) -> T {
        let l = T::of(aux.len() as f64);
        match self.prior {
            Prior::Gaussian => {
                T::half() * crate::scalar::norm_sq(aux) + T::half() * l * T::TAU().ln()
            }
            Prior::Laplace => aux.iter().map(|a| a.abs()).sum::<T>() + l * T::LN_2(),
        }
    }

    fn prior_gradient(&self, aux: &[T], grad: &mut [T]) {
        for (g, &a) in grad.iter_mut().zip(aux) {
            *g = match self.prior {
                Prior::Gaussian => a,
                Prior::Laplace => sign0(a),
            };
        }
    }

    fn sample_joint(&self, rng: &mut dyn rand::RngCore) -> (Vec<T>, Vec<T>) {
        let a: Vec<T> = (0..self.aux_dim())
            .map(|_| match self.prior {
                Prior::Gaussian => T::std_normal(rng),
                Prior::Laplace => sample_laplace(rng),
            })
            .collect();
        (observe(&self.phi, &a, self.sigma_n, rng), a)
    }

    fn exact_log_marginal(&self, x: &[T]) -> Option<T> {
        if self.phi.is_zero() {
            return Some(zero_basis_log_likelihood(x, self.sigma_n));
        }
        match self.prior {
            Prior::Gaussian => self.gaussian_marginal(x).map(T::of),
            Prior::Laplace => None,
        }
    }
}

/// Bilinear generative model: coefficients `a = (Θc) ⊙ (Ψd)` with a Laplace
/// prior on `c` and a unit exponential prior on `d ≥ 0`.
///
/// The auxiliary state is the concatenation `(c, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearGenerative<T> {
    phi: Matrix<T>,
    theta: Matrix<T>,
    psi: Matrix<T>,
    sigma_n: T,
}

impl<T: Scalar> BilinearGenerative<T> {
    pub fn new(phi: Matrix<T>, theta: Matrix<T>, psi: Matrix<T>, sigma_n: T) -> Result<Self> {
        validate_basis(&phi, sigma_n)?;
        check_dim("rows of theta (L)", phi.cols(), theta.rows())?;
        check_dim("rows of psi (L)", phi.cols(), psi.rows())?;
        if theta.cols() == 0 || psi.cols() == 0 {
            return Err(HaisError::param("theta/psi", "need at least one factor each"));
        }
        if !theta.is_finite() {
            return Err(HaisError::param("theta", "entries must be finite"));
        }
        if !psi.is_finite() {
            return Err(HaisError::param("psi", "entries must be finite"));
        }
        Ok(Self {
            phi,
            theta,
            psi,
            sigma_n,
        })
    }

    pub fn theta(&self) -> &Matrix<T> {
        &self.theta
    }

    pub fn psi(&self) -> &Matrix<T> {
        &self.psi
    }

    /// K_c
    pub fn n_c(&self) -> usize {
        self.theta.cols()
    }

    /// K_d
    pub fn n_d(&self) -> usize {
        self.psi.cols()
    }

    fn split<'s>(&self, aux: &'s [T]) -> (&'s [T], &'s [T]) {
        aux.split_at(self.n_c())
    }
}

impl<T: Scalar> GenerativeModel<T> for BilinearGenerative<T> {
    fn data_dim(&self) -> usize {
        self.phi.rows()
    }

    fn aux_dim(&self) -> usize {
        self.n_c() + self.n_d()
    }

    fn aux_constraints(&self) -> Vec<CoordinateBound<T>> {
        (self.n_c()..self.aux_dim())
            .map(CoordinateBound::nonnegative)
            .collect()
    }

    fn phi(&self) -> &Matrix<T> {
        &self.phi
    }

    fn sigma_n(&self) -> T {
        self.sigma_n
    }

    fn coefficients(&self, aux: &[T]) -> Vec<T> {
        let (c, d) = self.split(aux);
        let tc = self.theta.mul_vec(c);
        let pd = self.psi.mul_vec(d);
        tc.iter().zip(&pd).map(|(&u, &v)| u * v).collect()
    }

    fn pull_back(&self, aux: &[T], d_coeff: &[T], grad: &mut [T]) {
        let (c, d) = self.split(aux);
        let tc = self.theta.mul_vec(c);
        let pd = self.psi.mul_vec(d);
        let via_c: Vec<T> = d_coeff.iter().zip(&pd).map(|(&g, &v)| g * v).collect();
        let via_d: Vec<T> = d_coeff.iter().zip(&tc).map(|(&g, &u)| g * u).collect();
        let (gc, gd) = grad.split_at_mut(self.n_c());
        for (g, v) in gc.iter_mut().zip(self.theta.tr_mul_vec(&via_c)) {
            *g += v;
        }
        for (g, v) in gd.iter_mut().zip(self.psi.tr_mul_vec(&via_d)) {
            *g += v;
        }
    }

    fn prior_energy(&self, aux: &[T]) -> T {
        let (c, d) = self.split(aux);
        c.iter().map(|v| v.abs()).sum::<T>()
            + T::of(c.len() as f64) * T::LN_2()
            + d.iter().map(|v| v.abs()).sum::<T>()
    }

    fn prior_gradient(&self, aux: &[T], grad: &mut [T]) {
        for (g, &a) in grad.iter_mut().zip(aux) {
            *g = sign0(a);
        }
    }

    fn sample_joint(&self, rng: &mut dyn rand::RngCore) -> (Vec<T>, Vec<T>) {
        let mut aux: Vec<T> = (0..self.n_c()).map(|_| sample_laplace(rng)).collect();
        aux.extend((0..self.n_d()).map(|_| sample_exponential::<T>(rng)));
        let a = self.coefficients(&aux);
        (observe(&self.phi, &a, self.sigma_n, rng), aux)
    }
}

/// Energy over the auxiliary variables of a generative model for one fixed
/// datapoint `x`:
///
/// `E(aux) = ‖x - Φa‖² / (2σ_n²) + (M/2) log 2π + M log σ_n - log p(aux)`
///
/// Every normalizing constant is kept, so `log ∫ exp(-E) = log p(x)`.
#[derive(Debug, Clone)]
pub struct Posterior<'g, G: ?Sized, T> {
    model: &'g G,
    x: Vec<T>,
    constraints: Vec<CoordinateBound<T>>,
    noise_log_z: T,
}

impl<'g, G: GenerativeModel<T> + ?Sized, T: Scalar> Posterior<'g, G, T> {
    pub fn datapoint(&self) -> &[T] {
        &self.x
    }

    pub fn model(&self) -> &G {
        self.model
    }

    fn residual_scaled(&self, a: &[T]) -> Vec<T> {
        // (Φa - x) / σ²
        let inv = T::one() / (self.model.sigma_n() * self.model.sigma_n());
        let mut r = self.model.phi().mul_vec(a);
        for (ri, &xi) in r.iter_mut().zip(&self.x) {
            *ri = (*ri - xi) * inv;
        }
        r
    }
}

/// The auxiliary-space energy whose normalizer is `p(x)`.
pub fn posterior_model<'g, G: GenerativeModel<T> + ?Sized, T: Scalar>(
    model: &'g G,
    x: &[T],
) -> Result<Posterior<'g, G, T>> {
    check_dim("datapoint", model.data_dim(), x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HaisError::Input("datapoint has non-finite entries".into()));
    }
    let m = T::of(x.len() as f64);
    let sigma = model.sigma_n();
    Ok(Posterior {
        model,
        x: x.to_vec(),
        constraints: model.aux_constraints(),
        noise_log_z: T::half() * m * T::TAU().ln() + m * sigma.ln(),
    })
}

impl<G: GenerativeModel<T> + ?Sized, T: Scalar> EnergyModel<T> for Posterior<'_, G, T> {
    fn dim(&self) -> usize {
        self.model.aux_dim()
    }

    fn energy(&self, aux: &[T]) -> T {
        let a = self.model.coefficients(aux);
        let phi_a = self.model.phi().mul_vec(&a);
        let mut sq = T::zero();
        for (&p, &x) in phi_a.iter().zip(&self.x) {
            let r = x - p;
            sq += r * r;
        }
        let s = self.model.sigma_n();
        sq / (T::two() * s * s) + self.noise_log_z + self.model.prior_energy(aux)
    }

    fn gradient(&self, aux: &[T], grad: &mut [T]) {
        let a = self.model.coefficients(aux);
        let r = self.residual_scaled(&a);
        let d_coeff = self.model.phi().tr_mul_vec(&r);
        self.model.prior_gradient(aux, grad);
        self.model.pull_back(aux, &d_coeff, grad);
    }

    fn constraints(&self) -> &[CoordinateBound<T>] {
        &self.constraints
    }

    fn analytic_log_z(&self) -> Option<T> {
        self.model.exact_log_marginal(&self.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, TAU};

    #[test]
    fn zero_basis_sanity_value() {
        let g = LinearGenerative::new(Matrix::<f64>::zeros(2, 3), 0.1, Prior::Gaussian).unwrap();
        let post = posterior_model(&g, &[0.0, 0.0]).unwrap();
        let expected = -TAU.ln() - 2.0 * 0.1f64.ln();
        assert!((post.analytic_log_z().unwrap() - expected).abs() < 1e-12);
        assert!((expected - 2.7673).abs() < 1e-4);
    }

    #[test]
    fn zero_basis_energy_ignores_basis_width() {
        let x = [0.4, -0.2];
        let narrow = LinearGenerative::new(Matrix::<f64>::zeros(2, 1), 0.1, Prior::Laplace).unwrap();
        let wide = LinearGenerative::new(Matrix::<f64>::zeros(2, 5), 0.1, Prior::Laplace).unwrap();
        let pn = posterior_model(&narrow, &x).unwrap();
        let pw = posterior_model(&wide, &x).unwrap();
        // only the prior normalizers differ at a = 0
        let en = pn.energy(&[0.0]) - LN_2;
        let ew = pw.energy(&[0.0; 5]) - 5.0 * LN_2;
        assert!((en - ew).abs() < 1e-12);
    }

    #[test]
    fn laplace_prior_at_origin_is_normalizer_only() {
        let g = LinearGenerative::new(Matrix::<f64>::identity(3), 0.1, Prior::Laplace).unwrap();
        assert!((g.prior_energy(&[0.0; 3]) - 3.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn bilinear_prior_terms() {
        let b = BilinearGenerative::new(
            Matrix::<f64>::identity(2),
            Matrix::identity(2),
            Matrix::identity(2),
            0.1,
        )
        .unwrap();
        let e = b.prior_energy(&[1.0, -1.0, 2.0, 0.0]);
        assert!((e - 2.0 * LN_2 - 4.0).abs() < 1e-15);
        let cons = b.aux_constraints();
        assert_eq!(cons.iter().map(|c| c.index).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn gaussian_marginal_identity_basis() {
        let g = LinearGenerative::new(Matrix::<f64>::identity(2), 0.1, Prior::Gaussian).unwrap();
        let ll = g.exact_log_marginal(&[0.0, 0.0]).unwrap();
        let expected = -TAU.ln() - 1.01f64.ln();
        assert!((ll - expected).abs() < 1e-12);
        assert!((ll + 1.8479).abs() < 1e-4);
    }

    #[test]
    fn laplace_marginal_has_no_oracle() {
        let g = LinearGenerative::new(Matrix::<f64>::identity(2), 0.1, Prior::Laplace).unwrap();
        assert!(g.exact_log_marginal(&[0.0, 0.0]).is_none());
    }

    #[test]
    fn datapoint_dimension_checked() {
        let g = LinearGenerative::new(Matrix::<f64>::identity(2), 0.1, Prior::Gaussian).unwrap();
        assert!(posterior_model(&g, &[0.0]).is_err());
    }
}
