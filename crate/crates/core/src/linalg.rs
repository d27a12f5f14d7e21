//! Small dense row-major matrix used for model parameters and datasets.
//!
//! Factorizations (determinants, eigendecompositions, Cholesky) are done in
//! `f64` through `nalgebra`; see [`Matrix::to_nalgebra`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HaisError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HaisError::DimensionMismatch {
                what: "matrix data".into(),
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(HaisError::DimensionMismatch {
                    what: format!("row {i} length"),
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    /// `out = self · v`
    pub fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = crate::scalar::dot(self.row(i), v);
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `out = selfᵀ · v`
    pub fn tr_mul_vec_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
    }

    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_into(v, &mut out);
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].as_f64())
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| T::of(m[(i, j)]))
    }

    pub fn to_nested_f64(&self) -> Vec<Vec<f64>> {
        self.iter_rows()
            .map(|r| r.iter().map(|v| v.as_f64()).collect())
            .collect()
    }

    /// Appends the rows of `other`; column counts must agree.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.rows > 0 && other.rows > 0 && self.cols != other.cols {
            return Err(HaisError::DimensionMismatch {
                what: "stacked columns".into(),
                expected: self.cols,
                found: other.cols,
            });
        }
        let cols = if self.rows > 0 { self.cols } else { other.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols,
            data,
        })
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// JSON form: row-major nested arrays. An empty array is a 0×0 matrix.
impl<T: Scalar> Serialize for Matrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested_f64().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<T>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(T::of).collect())
            .collect();
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// `log|det A|` for a square matrix, `None` when singular or non-finite.
pub fn log_abs_det(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() != a.ncols() {
        return None;
    }
    let det = a.clone().lu().determinant();
    if det == 0.0 || !det.is_finite() {
        // fall back to the SVD for tiny/huge determinants
        let sv = a.clone().svd(false, false).singular_values;
        if sv.iter().any(|&s| s <= f64::EPSILON * sv.max() * a.nrows() as f64) {
            return None;
        }
        let v: f64 = sv.iter().map(|s| s.ln()).sum();
        return v.is_finite().then_some(v);
    }
    Some(det.abs().ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree_with_nalgebra() {
        let m = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap();
        let v = [0.3, -2.0, 1.5];
        let w = [2.0, -1.0];
        let na = m.to_nalgebra();
        let mv = &na * nalgebra::DVector::from_row_slice(&v);
        let tv = na.transpose() * nalgebra::DVector::from_row_slice(&w);
        for (a, b) in m.mul_vec(&v).iter().zip(mv.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in m.tr_mul_vec(&w).iter().zip(tv.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = Matrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, HaisError::DimensionMismatch { .. }));
    }

    #[test]
    fn log_abs_det_flags_singular() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(log_abs_det(&s).is_none());
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -3.0]);
        assert!((log_abs_det(&d).unwrap() - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn json_is_nested_rows() {
        let m = Matrix::<f32>::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix<f32> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
