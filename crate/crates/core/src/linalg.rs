//! Small dense linear algebra over [`Real`] scalars.
//!
//! The estimation problems here have at most a few dozen columns, so these
//! routines favour clarity over blocking: Cholesky for the IRLS normal
//! equations, Householder QR for weighted least squares and cyclic Jacobi for
//! symmetric eigenproblems.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or not positive definite (column {column})")]
    Singular { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("eigen solver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::Dimension { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum()).collect())
    }

    pub fn scale_in_place(&mut self, k: T) {
        self.data.iter_mut().for_each(|v| *v = *v * k);
    }

    /// Mirror the upper triangle onto the lower one.
    pub fn symmetrize_from_upper(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                self[(i, j)] = self[(j, i)];
            }
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot tolerance used for rank decisions.
fn rank_tolerance<T: Real>() -> T {
    T::epsilon() * T::of(1e4)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factor `a`; pivots that collapse relative to their original diagonal
    /// entry are reported as singular.
    pub fn new(a: &Matrix<T>) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::Dimension { expected: n, got: a.cols() });
        }
        let tol = rank_tolerance::<T>();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            let scale = a[(j, j)].abs();
            if !(d > tol * scale) || !d.is_finite() {
                return Err(LinalgError::Singular { column: j });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lower.rows();
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lower.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Least squares `min ||x b - y||` by Householder QR.
///
/// Returns the coefficients and the upper-triangular `R`, so that
/// `(x'x)^{-1} = R^{-1} R^{-T}` is available to the caller.
pub fn least_squares_qr<T: Real>(x: &Matrix<T>, y: &[T]) -> Result<(Vec<T>, Matrix<T>), LinalgError> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(LinalgError::Dimension { expected: n, got: y.len() });
    }
    if n < p {
        return Err(LinalgError::Singular { column: n });
    }
    let mut a = x.clone();
    let mut rhs = y.to_vec();
    let col_norms: Vec<T> = (0..p).map(|j| (0..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<T>().sqrt()).collect();
    let tol = rank_tolerance::<T>();
    for k in 0..p {
        let norm: T = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<T>().sqrt();
        if !(norm > tol * col_norms[k]) {
            return Err(LinalgError::Singular { column: k });
        }
        let alpha = if a[(k, k)] > T::zero() { -norm } else { norm };
        // v = a[k.., k] - alpha e_k, stored in place
        a[(k, k)] = a[(k, k)] - alpha;
        let vnorm2: T = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum();
        for j in (k + 1)..p {
            let dot: T = (k..n).map(|i| a[(i, k)] * a[(i, j)]).sum();
            let f = (dot + dot) / vnorm2;
            for i in k..n {
                a[(i, j)] = a[(i, j)] - f * a[(i, k)];
            }
        }
        let dot: T = (k..n).map(|i| a[(i, k)] * rhs[i]).sum();
        let f = (dot + dot) / vnorm2;
        for i in k..n {
            rhs[i] = rhs[i] - f * a[(i, k)];
        }
        a[(k, k)] = alpha;
        for i in (k + 1)..n {
            a[(i, k)] = T::zero();
        }
    }
    let mut r = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            r[(i, j)] = a[(i, j)];
        }
    }
    let mut coef = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for j in (i + 1)..p {
            s = s - r[(i, j)] * coef[j];
        }
        coef[i] = s / r[(i, i)];
    }
    Ok((coef, r))
}

/// `(R'R)^{-1}` for an upper-triangular `R`.
pub fn inverse_from_r<T: Real>(r: &Matrix<T>) -> Matrix<T> {
    let p = r.rows();
    let mut rinv = Matrix::zeros(p, p);
    for j in 0..p {
        rinv[(j, j)] = T::one() / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = T::zero();
            for k in (i + 1)..=j {
                s = s + r[(i, k)] * rinv[(k, j)];
            }
            rinv[(i, j)] = -s / r[(i, i)];
        }
    }
    let mut out = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: T = (j..p).map(|k| rinv[(i, k)] * rinv[(j, k)]).sum();
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in descending order; eigenvector `k` is column `k`
/// of the returned matrix.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>), LinalgError> {
    const MAX_SWEEPS: usize = 100;
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::Dimension { expected: n, got: a.cols() });
    }
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let two = T::of(2.0);
    let scale: T = m.as_slice().iter().map(|x| *x * *x).sum::<T>().sqrt();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * scale || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd() -> Matrix<f64> {
        Matrix::from_row_major(3, 3, vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]).unwrap()
    }

    #[test]
    fn cholesky_inverse_roundtrip() {
        let a = spd();
        let inv = Cholesky::new(&a).unwrap().inverse();
        let prod = a.matmul(&inv).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_duplicate_column() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(Cholesky::new(&a).unwrap_err(), LinalgError::Singular { column: 1 });
    }

    #[test]
    fn qr_matches_normal_equations() {
        let x = Matrix::<f64>::from_row_major(4, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]).unwrap();
        let y = [1.0f64, 3.0, 2.0, 5.0];
        let (b, r) = least_squares_qr(&x, &y).unwrap();
        assert!((b[0] - 1.1).abs() < 1e-12);
        assert!((b[1] - 1.1).abs() < 1e-12);
        let xtx = x.transpose().matmul(&x).unwrap();
        let via_r = inverse_from_r(&r);
        let via_chol = Cholesky::new(&xtx).unwrap().inverse();
        for (a, b) in via_r.as_slice().iter().zip(via_chol.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_on_diagonal_matrix_sorts_descending() {
        let a = Matrix::from_row_major(3, 3, vec![1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn jacobi_reconstructs_matrix_in_f32() {
        let a = Matrix::<f32>::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-5);
        assert!((vals[1] - 1.0).abs() < 1e-5);
        assert!((vecs[(0, 0)].abs() - std::f32::consts::FRAC_1_SQRT_2).abs() < 1e-5);
    }
}
