//! Model parameter files and seeded random parameter draws.
//!
//! A parameter file is a JSON object tagged by `model_type`. Dimension fields
//! are required and every matrix (row-major nested arrays) and vector is
//! checked against them:
//!
//! | `model_type`          | dimension fields        | parameters                                              |
//! |-----------------------|-------------------------|---------------------------------------------------------|
//! | `gaussian`            | `dim`                   | `scale` (optional, default all ones)                    |
//! | `poe`                 | `m`, `l`                | `expert` (`laplace`/`student_t`), `phi` L×M, `lambda` L (optional for Laplace) |
//! | `mcrbm`               | `m`, `l`, `k`, `j`      | `p` L×K, `c` L×M, `w` J×M, `b_m` J, `b_c` K, `b_v` M, `sigma` |
//! | `linear_generative`   | `m`, `l`                | `prior` (`gaussian`/`laplace`), `phi` M×L, `sigma_n` (default 0.1) |
//! | `bilinear_generative` | `m`, `l`, `k_c`, `k_d`  | `phi` M×L, `theta` L×K_c, `psi` L×K_d, `sigma_n` (default 0.1) |

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    BilinearGenerative, EnergyModel, Expert, GaussianReference, GenerativeModel, LinearGenerative,
    McRbm, PoeModel, Prior,
};
use crate::error::{HaisError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

fn default_sigma_n() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFile {
    Gaussian {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<Vec<f64>>,
    },
    Poe {
        m: usize,
        l: usize,
        expert: Expert,
        phi: Matrix<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<Vec<f64>>,
    },
    Mcrbm {
        m: usize,
        l: usize,
        k: usize,
        j: usize,
        p: Matrix<f64>,
        c: Matrix<f64>,
        w: Matrix<f64>,
        b_m: Vec<f64>,
        b_c: Vec<f64>,
        b_v: Vec<f64>,
        sigma: f64,
    },
    LinearGenerative {
        m: usize,
        l: usize,
        prior: Prior,
        phi: Matrix<f64>,
        #[serde(default = "default_sigma_n")]
        sigma_n: f64,
    },
    BilinearGenerative {
        m: usize,
        l: usize,
        k_c: usize,
        k_d: usize,
        phi: Matrix<f64>,
        theta: Matrix<f64>,
        psi: Matrix<f64>,
        #[serde(default = "default_sigma_n")]
        sigma_n: f64,
    },
}

/// A model loaded from a parameter file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel<T> {
    Gaussian(GaussianReference<T>),
    Poe(PoeModel<T>),
    McRbm(McRbm<T>),
    Linear(LinearGenerative<T>),
    Bilinear(BilinearGenerative<T>),
}

impl<T: Scalar> AnyModel<T> {
    /// The energy over data space, for analysis models.
    pub fn as_analysis(&self) -> Option<&dyn EnergyModel<T>> {
        match self {
            AnyModel::Gaussian(m) => Some(m),
            AnyModel::Poe(m) => Some(m),
            AnyModel::McRbm(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_generative(&self) -> Option<&dyn GenerativeModel<T>> {
        match self {
            AnyModel::Linear(m) => Some(m),
            AnyModel::Bilinear(m) => Some(m),
            _ => None,
        }
    }

    /// Dimension of the data the model describes.
    pub fn data_dim(&self) -> usize {
        match (self.as_analysis(), self.as_generative()) {
            (Some(a), _) => a.dim(),
            (_, Some(g)) => g.data_dim(),
            _ => unreachable!(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Gaussian(_) => "gaussian",
            AnyModel::Poe(_) => "poe",
            AnyModel::McRbm(_) => "mcrbm",
            AnyModel::Linear(_) => "linear_generative",
            AnyModel::Bilinear(_) => "bilinear_generative",
        }
    }
}

fn expect_shape(field: &str, mat: &Matrix<f64>, rows: usize, cols: usize) -> Result<()> {
    let (r, c) = (mat.rows(), mat.cols());
    if r != rows || c != cols {
        return Err(HaisError::ModelFormat(format!(
            "field `{field}` has shape {r}x{c}, expected {rows}x{cols}"
        )));
    }
    Ok(())
}

fn expect_len(field: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(HaisError::ModelFormat(format!(
            "field `{field}` has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(())
}

fn expect_positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(HaisError::ModelFormat(format!("field `{field}` must be positive")));
    }
    Ok(())
}

fn cast<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::of(x)).collect()
}

fn cast_m<T: Scalar>(m: &Matrix<f64>) -> Matrix<T> {
    m.map(T::of)
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HaisError::ModelFormat(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HaisError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| HaisError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Validates dimensions and builds the model at scalar type `T`.
    pub fn build<T: Scalar>(&self) -> Result<AnyModel<T>> {
        Ok(match self {
            ModelFile::Gaussian { dim, scale } => {
                expect_positive("dim", *dim)?;
                let g = match scale {
                    Some(s) => {
                        expect_len("scale", s, *dim)?;
                        GaussianReference::with_scale(cast(s))?
                    }
                    None => GaussianReference::standard(*dim),
                };
                AnyModel::Gaussian(g)
            }
            ModelFile::Poe {
                m,
                l,
                expert,
                phi,
                lambda,
            } => {
                expect_positive("m", *m)?;
                expect_positive("l", *l)?;
                expect_shape("phi", phi, *l, *m)?;
                let lambda = match (lambda, expert) {
                    (Some(lam), _) => {
                        expect_len("lambda", lam, *l)?;
                        cast(lam)
                    }
                    (None, Expert::Laplace) => vec![T::one(); *l],
                    (None, Expert::StudentT) => {
                        return Err(HaisError::ModelFormat(
                            "field `lambda` is required for student_t experts".into(),
                        ))
                    }
                };
                AnyModel::Poe(PoeModel::new(cast_m(phi), lambda, *expert)?)
            }
            ModelFile::Mcrbm {
                m,
                l,
                k,
                j,
                p,
                c,
                w,
                b_m,
                b_c,
                b_v,
                sigma,
            } => {
                for (f, v) in [("m", m), ("l", l), ("k", k), ("j", j)] {
                    expect_positive(f, *v)?;
                }
                expect_shape("p", p, *l, *k)?;
                expect_shape("c", c, *l, *m)?;
                expect_shape("w", w, *j, *m)?;
                expect_len("b_m", b_m, *j)?;
                expect_len("b_c", b_c, *k)?;
                expect_len("b_v", b_v, *m)?;
                AnyModel::McRbm(McRbm::new(
                    cast_m(p),
                    cast_m(c),
                    cast_m(w),
                    cast(b_m),
                    cast(b_c),
                    cast(b_v),
                    T::of(*sigma),
                )?)
            }
            ModelFile::LinearGenerative {
                m,
                l,
                prior,
                phi,
                sigma_n,
            } => {
                expect_positive("m", *m)?;
                expect_positive("l", *l)?;
                expect_shape("phi", phi, *m, *l)?;
                AnyModel::Linear(LinearGenerative::new(cast_m(phi), T::of(*sigma_n), *prior)?)
            }
            ModelFile::BilinearGenerative {
                m,
                l,
                k_c,
                k_d,
                phi,
                theta,
                psi,
                sigma_n,
            } => {
                for (f, v) in [("m", m), ("l", l), ("k_c", k_c), ("k_d", k_d)] {
                    expect_positive(f, *v)?;
                }
                expect_shape("phi", phi, *m, *l)?;
                expect_shape("theta", theta, *l, *k_c)?;
                expect_shape("psi", psi, *l, *k_d)?;
                AnyModel::Bilinear(BilinearGenerative::new(
                    cast_m(phi),
                    cast_m(theta),
                    cast_m(psi),
                    T::of(*sigma_n),
                )?)
            }
        })
    }
}

impl<T: Scalar> From<&AnyModel<T>> for ModelFile {
    fn from(model: &AnyModel<T>) -> Self {
        let v = |s: &[T]| s.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        let mat = |m: &Matrix<T>| m.map(|x| x.as_f64());
        match model {
            AnyModel::Gaussian(g) => ModelFile::Gaussian {
                dim: g.dim(),
                scale: Some(v(g.scale())),
            },
            AnyModel::Poe(p) => ModelFile::Poe {
                m: p.dim(),
                l: p.n_experts(),
                expert: p.expert(),
                phi: mat(p.phi()),
                lambda: Some(v(p.lambda())),
            },
            AnyModel::McRbm(r) => ModelFile::Mcrbm {
                m: r.dim(),
                l: r.n_filters(),
                k: r.n_covariance_units(),
                j: r.n_mean_units(),
                p: mat(r.p()),
                c: mat(r.c()),
                w: mat(r.w()),
                b_m: v(r.b_m()),
                b_c: v(r.b_c()),
                b_v: v(r.b_v()),
                sigma: r.sigma().as_f64(),
            },
            AnyModel::Linear(g) => ModelFile::LinearGenerative {
                m: g.data_dim(),
                l: g.aux_dim(),
                prior: g.prior(),
                phi: mat(g.phi()),
                sigma_n: g.sigma_n().as_f64(),
            },
            AnyModel::Bilinear(b) => ModelFile::BilinearGenerative {
                m: b.data_dim(),
                l: b.phi().cols(),
                k_c: b.n_c(),
                k_d: b.n_d(),
                phi: mat(b.phi()),
                theta: mat(b.theta()),
                psi: mat(b.psi()),
                sigma_n: b.sigma_n().as_f64(),
            },
        }
    }
}

/// `rows × cols` matrix of independent N(0, 1) draws scaled by `1/√fan_in`.
pub fn random_matrix<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    rng: &mut R,
) -> Matrix<T> {
    let s = T::one() / T::of(fan_in.max(1) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| s * T::std_normal(rng))
}

/// Random `n × n` orthogonal matrix (QR of a Gaussian matrix with the sign of
/// `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let g = random_matrix::<f64, _>(n, n, 1, rng).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Matrix::from_nalgebra(&q)
}

/// POE with L experts over M dimensions; Student-t weights uniform in
/// `lambda_range`.
pub fn random_poe<T: Scalar, R: Rng + ?Sized>(
    l: usize,
    m: usize,
    expert: Expert,
    lambda_range: (f64, f64),
    rng: &mut R,
) -> Result<PoeModel<T>> {
    let phi = random_matrix(l, m, m, rng);
    let lambda = match expert {
        Expert::Laplace => vec![T::one(); l],
        Expert::StudentT => (0..l)
            .map(|_| T::of(rng.random_range(lambda_range.0..=lambda_range.1)))
            .collect(),
    };
    PoeModel::new(phi, lambda, expert)
}

/// mcRBM with small random filters and biases.
pub fn random_mcrbm<T: Scalar, R: Rng + ?Sized>(
    m: usize,
    l: usize,
    k: usize,
    j: usize,
    rng: &mut R,
) -> Result<McRbm<T>> {
    let small = |n: usize, rng: &mut R| -> Vec<T> {
        (0..n).map(|_| T::of(0.1) * T::std_normal(rng)).collect()
    };
    let p = random_matrix(l, k, l, rng);
    let c = random_matrix(l, m, m, rng);
    let w = random_matrix(j, m, m, rng);
    let b_m = small(j, rng);
    let b_c = small(k, rng);
    let b_v = small(m, rng);
    McRbm::new(p, c, w, b_m, b_c, b_v, T::one())
}

pub fn random_linear<T: Scalar, R: Rng + ?Sized>(
    m: usize,
    l: usize,
    prior: Prior,
    rng: &mut R,
) -> Result<LinearGenerative<T>> {
    LinearGenerative::new(
        random_matrix(m, l, m, rng),
        T::of(LinearGenerative::<T>::DEFAULT_SIGMA_N),
        prior,
    )
}

pub fn random_bilinear<T: Scalar, R: Rng + ?Sized>(
    m: usize,
    l: usize,
    k_c: usize,
    k_d: usize,
    rng: &mut R,
) -> Result<BilinearGenerative<T>> {
    BilinearGenerative::new(
        random_matrix(m, l, m, rng),
        random_matrix(l, k_c, k_c, rng),
        random_matrix(l, k_d, k_d, rng),
        T::of(LinearGenerative::<T>::DEFAULT_SIGMA_N),
    )
}
