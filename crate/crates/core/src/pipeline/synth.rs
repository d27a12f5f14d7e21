use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{HaisError, Result};
use crate::likelihood::Dataset;
use crate::linalg::Matrix;

/// Covariance of a synthetic zero-mean Gaussian dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Identity,
    Diagonal(Vec<f64>),
    Full(Matrix<f64>),
}

impl CovarianceSpec {
    fn to_matrix(&self, dim: usize) -> Result<DMatrix<f64>> {
        match self {
            CovarianceSpec::Identity => Ok(DMatrix::identity(dim, dim)),
            CovarianceSpec::Diagonal(d) => {
                if d.len() != dim {
                    return Err(HaisError::dims("covariance diagonal", dim, d.len()));
                }
                Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d)))
            }
            CovarianceSpec::Full(m) => {
                if m.rows() != dim || m.cols() != dim {
                    return Err(HaisError::dims("covariance matrix size", dim, m.rows()));
                }
                let c = m.to_nalgebra();
                if (&c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
                    return Err(HaisError::Input("covariance is not symmetric".into()));
                }
                Ok(c)
            }
        }
    }
}

/// `n` draws of `N(0, Σ)`; `Σ` must be positive definite.
pub fn synth_gaussian<R: Rng + ?Sized>(
    dim: usize,
    cov: &CovarianceSpec,
    n: usize,
    rng: &mut R,
) -> Result<Dataset<f64>> {
    let c = cov.to_matrix(dim)?;
    let chol = c
        .cholesky()
        .ok_or_else(|| HaisError::Input("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut out = Matrix::zeros(n, dim);
    let mut z = nalgebra::DVector::zeros(dim);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let x = &l * &z;
        out.row_mut(i).copy_from_slice(x.as_slice());
    }
    Dataset::new(out)
}
