use super::{check_dim, EnergyModel};
use crate::error::{HaisError, Result};
use crate::linalg::Matrix;
use crate::scalar::{dot, norm_sq, sigmoid, softplus, Scalar};

/// Mean-and-covariance RBM with hidden units summed out.
///
/// ```text
/// E(x) = -Σ_k softplus(½ Σ_l P_lk (C_l·x)² / (‖x‖² + ½) + bᶜ_k)
///        -Σ_j softplus(W_j·x + bᵐ_j)
///        + xᵀx / (2σ²) - xᵀbᵛ
/// ```
///
/// Shapes: `P` is L×K, `C` is L×M, `W` is J×M, `bᵐ` has J entries, `bᶜ` K and
/// `bᵛ` M.
#[derive(Debug, Clone, PartialEq)]
pub struct McRbm<T> {
    p_mat: Matrix<T>,
    c_mat: Matrix<T>,
    w_mat: Matrix<T>,
    b_m: Vec<T>,
    b_c: Vec<T>,
    b_v: Vec<T>,
    sigma: T,
}

impl<T: Scalar> McRbm<T> {
    pub fn new(
        p_mat: Matrix<T>,
        c_mat: Matrix<T>,
        w_mat: Matrix<T>,
        b_m: Vec<T>,
        b_c: Vec<T>,
        b_v: Vec<T>,
        sigma: T,
    ) -> Result<Self> {
        let m = c_mat.cols();
        if m == 0 {
            return Err(HaisError::param("c", "data dimension must be positive"));
        }
        check_dim("rows of p (L)", c_mat.rows(), p_mat.rows())?;
        check_dim("columns of w (M)", m, w_mat.cols())?;
        check_dim("length of b_m (J)", w_mat.rows(), b_m.len())?;
        check_dim("length of b_c (K)", p_mat.cols(), b_c.len())?;
        check_dim("length of b_v (M)", m, b_v.len())?;
        for (name, mat) in [("p", &p_mat), ("c", &c_mat), ("w", &w_mat)] {
            if !mat.is_finite() {
                return Err(HaisError::param(name, "entries must be finite"));
            }
        }
        for (name, v) in [("b_m", &b_m), ("b_c", &b_c), ("b_v", &b_v)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(HaisError::param(name, "entries must be finite"));
            }
        }
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(HaisError::param("sigma", "must be finite and positive"));
        }
        Ok(Self {
            p_mat,
            c_mat,
            w_mat,
            b_m,
            b_c,
            b_v,
            sigma,
        })
    }

    /// Covariance units K.
    pub fn n_covariance_units(&self) -> usize {
        self.p_mat.cols()
    }

    /// Mean units J.
    pub fn n_mean_units(&self) -> usize {
        self.w_mat.rows()
    }

    /// Covariance filters L.
    pub fn n_filters(&self) -> usize {
        self.c_mat.rows()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p_mat
    }
    pub fn c(&self) -> &Matrix<T> {
        &self.c_mat
    }
    pub fn w(&self) -> &Matrix<T> {
        &self.w_mat
    }
    pub fn b_m(&self) -> &[T] {
        &self.b_m
    }
    pub fn b_c(&self) -> &[T] {
        &self.b_c
    }
    pub fn b_v(&self) -> &[T] {
        &self.b_v
    }

    /// Normalized squared filter responses `(C_l·x)² / (‖x‖² + ½)` and the
    /// raw responses.
    fn filter_terms(&self, x: &[T]) -> (Vec<T>, Vec<T>, T) {
        let denom = norm_sq(x) + T::half();
        let s = self.c_mat.mul_vec(x);
        let q = s.iter().map(|&v| v * v / denom).collect();
        (s, q, denom)
    }

    /// Covariance unit inputs `z_k = ½ Σ_l P_lk q_l + bᶜ_k`.
    fn covariance_inputs(&self, q: &[T]) -> Vec<T> {
        let mut z = self.p_mat.tr_mul_vec(q);
        for (zk, &b) in z.iter_mut().zip(&self.b_c) {
            *zk = T::half() * *zk + b;
        }
        z
    }
}

/// Checked mcRBM energy.
pub fn mcrbm_energy<T: Scalar>(model: &McRbm<T>, x: &[T]) -> Result<T> {
    model.checked_energy(x)
}

impl<T: Scalar> EnergyModel<T> for McRbm<T> {
    fn dim(&self) -> usize {
        self.c_mat.cols()
    }

    fn energy(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        let (_, q, _) = self.filter_terms(x);
        let z = self.covariance_inputs(&q);
        let mut e = T::zero();
        for zk in z {
            e -= softplus(zk);
        }
        for (j, &b) in self.b_m.iter().enumerate() {
            e -= softplus(dot(self.w_mat.row(j), x) + b);
        }
        e + norm_sq(x) / (T::two() * self.sigma * self.sigma) - dot(x, &self.b_v)
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        let (s, q, denom) = self.filter_terms(x);
        let z = self.covariance_inputs(&q);
        // g_l = Σ_k σ(z_k) P_lk
        let act: Vec<T> = z.iter().map(|&zk| sigmoid(zk)).collect();
        let g = self.p_mat.mul_vec(&act);

        // ∂z_k/∂x = Σ_l P_lk (s_l C_l / n - s_l² x / n²), n = ‖x‖² + ½
        let gs: Vec<T> = g.iter().zip(&s).map(|(&gl, &sl)| gl * sl).collect();
        self.c_mat.tr_mul_vec_into(&gs, grad);
        let radial = dot(&gs, &s) / (denom * denom);
        let inv_var = T::one() / (self.sigma * self.sigma);
        for (i, gi) in grad.iter_mut().enumerate() {
            *gi = -*gi / denom + radial * x[i] + x[i] * inv_var - self.b_v[i];
        }

        for (j, &b) in self.b_m.iter().enumerate() {
            let row = self.w_mat.row(j);
            let a = sigmoid(dot(row, x) + b);
            for (gi, &w) in grad.iter_mut().zip(row) {
                *gi -= a * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn zero_model(m: usize, l: usize, k: usize, j: usize, sigma: f64) -> McRbm<f64> {
        McRbm::new(
            Matrix::zeros(l, k),
            Matrix::zeros(l, m),
            Matrix::zeros(j, m),
            vec![0.0; j],
            vec![0.0; k],
            vec![0.0; m],
            sigma,
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_at_origin() {
        let m = zero_model(2, 1, 1, 1, 1.0);
        let e = mcrbm_energy(&m, &[0.0, 0.0]).unwrap();
        assert!((e + 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn quadratic_term_only() {
        // ‖x‖² = 2, K = 3, J = 2
        let m = zero_model(2, 4, 3, 2, 1.0);
        let e = m.energy(&[1.0, -1.0]);
        assert!((e - (-(5.0) * LN_2 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_weights_reduce_to_gaussian_with_constant() {
        let m = zero_model(3, 2, 2, 2, 0.7);
        let x = [0.3, -1.2, 2.0];
        let quad: f64 = x.iter().map(|v| v * v).sum::<f64>() / (2.0 * 0.49);
        assert!((m.energy(&x) - (quad - 4.0 * LN_2)).abs() < 1e-13);
    }

    #[test]
    fn shape_validation() {
        let bad = McRbm::new(
            Matrix::<f64>::zeros(2, 1),
            Matrix::zeros(3, 2),
            Matrix::zeros(1, 2),
            vec![0.0],
            vec![0.0],
            vec![0.0; 2],
            1.0,
        );
        assert!(bad.is_err());
        let bad_sigma = McRbm::new(
            Matrix::<f64>::zeros(1, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 2),
            vec![0.0],
            vec![0.0],
            vec![0.0; 2],
            0.0,
        );
        assert!(bad_sigma.is_err());
    }
}
