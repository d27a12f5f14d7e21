use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{HaisError, Result};
use crate::linalg::Matrix;

/// Mean subtraction, projection onto the leading principal directions, and
/// rescaling of each projected coordinate to unit sample variance.
///
/// `apply(x)_k = scales_k · basis_k · (x - mean)`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitenTransform {
    pub mean: Vec<f64>,
    /// M×D, rows are orthonormal principal directions by decreasing variance.
    pub basis: Matrix<f64>,
    pub scales: Vec<f64>,
}

impl WhitenTransform {
    /// Input dimension D.
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    /// Output dimension M.
    pub fn output_dim(&self) -> usize {
        self.scales.len()
    }

    fn check(&self, what: &str, expected: usize, rows: &Matrix<f64>) -> Result<()> {
        if rows.rows() > 0 && rows.cols() != expected {
            return Err(HaisError::dims(what, expected, rows.cols()));
        }
        Ok(())
    }

    pub fn apply(&self, rows: &Matrix<f64>) -> Result<Matrix<f64>> {
        self.check("columns to whiten", self.input_dim(), rows)?;
        let mut out = Matrix::zeros(rows.rows(), self.output_dim());
        let mut centered = vec![0.0; self.input_dim()];
        for (i, r) in rows.iter_rows().enumerate() {
            for ((c, &v), &m) in centered.iter_mut().zip(r).zip(&self.mean) {
                *c = v - m;
            }
            let proj = self.basis.mul_vec(&centered);
            for ((o, p), &s) in out.row_mut(i).iter_mut().zip(proj).zip(&self.scales) {
                *o = p * s;
            }
        }
        Ok(out)
    }

    /// Maps whitened rows back to input space; exact on the span of the basis.
    pub fn invert(&self, rows: &Matrix<f64>) -> Result<Matrix<f64>> {
        self.check("columns to invert", self.output_dim(), rows)?;
        let mut out = Matrix::zeros(rows.rows(), self.input_dim());
        for (i, r) in rows.iter_rows().enumerate() {
            let unscaled: Vec<f64> = r.iter().zip(&self.scales).map(|(&v, &s)| v / s).collect();
            let back = self.basis.tr_mul_vec(&unscaled);
            for ((o, b), &m) in out.row_mut(i).iter_mut().zip(back).zip(&self.mean) {
                *o = b + m;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transform serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text).map_err(|e| HaisError::Input(format!("transform file: {e}")))?;
        if t.basis.rows() != t.scales.len() || t.basis.cols() != t.mean.len() {
            return Err(HaisError::Input(format!(
                "transform file: basis is {}x{} but mean has {} and scales {} entries",
                t.basis.rows(),
                t.basis.cols(),
                t.mean.len(),
                t.scales.len()
            )));
        }
        Ok(t)
    }
}

/// Sample mean and covariance (n - 1 normalization).
pub(crate) fn mean_and_covariance(data: &Matrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = data.rows();
    let d = data.cols();
    let mut mean = vec![0.0; d];
    for r in data.iter_rows() {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut c = vec![0.0; d];
    for r in data.iter_rows() {
        for ((ci, &v), &m) in c.iter_mut().zip(r).zip(&mean) {
            *ci = v - m;
        }
        for i in 0..d {
            let ci = c[i];
            for j in i..d {
                cov[(i, j)] += ci * c[j];
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Fits a whitening transform keeping the top `m_components` directions.
pub fn fit_whiten(data: &Matrix<f64>, m_components: usize) -> Result<WhitenTransform> {
    let d = data.cols();
    if m_components == 0 {
        return Err(HaisError::param("m_components", "must be at least 1"));
    }
    if m_components > d {
        return Err(HaisError::param(
            "m_components",
            format!("{m_components} components requested from {d} columns"),
        ));
    }
    if data.rows() < m_components || data.rows() < 2 {
        return Err(HaisError::param(
            "m_components",
            format!("{} rows cannot support {m_components} components", data.rows()),
        ));
    }
    if !data.is_finite() {
        return Err(HaisError::Input("data contains non-finite values".into()));
    }

    let (mean, cov) = mean_and_covariance(data);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]].max(0.0);
    let tol = f64::EPSILON * d as f64 * top.max(f64::MIN_POSITIVE) * 16.0;
    let mut basis = Matrix::zeros(m_components, d);
    let mut scales = Vec::with_capacity(m_components);
    for (k, &idx) in order.iter().take(m_components).enumerate() {
        let var = eig.eigenvalues[idx];
        if var.is_nan() || var <= tol {
            return Err(HaisError::DegenerateData(format!(
                "principal component {k} has variance {var:e}; the data span fewer than {m_components} dimensions"
            )));
        }
        let col = eig.eigenvectors.column(idx);
        // sign convention: largest-magnitude entry positive
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in col.iter().enumerate() {
            basis[(k, j)] = sign * v;
        }
        scales.push(1.0 / var.sqrt());
    }
    Ok(WhitenTransform { mean, basis, scales })
}

pub fn apply_whiten(t: &WhitenTransform, rows: &Matrix<f64>) -> Result<Matrix<f64>> {
    t.apply(rows)
}

pub fn invert_whiten(t: &WhitenTransform, rows: &Matrix<f64>) -> Result<Matrix<f64>> {
    t.invert(rows)
}
