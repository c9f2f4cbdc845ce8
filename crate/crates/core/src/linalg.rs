//! Dense square matrices of latent dimension size.
//!
//! The latent dimension is tiny (usually 2), so everything here is plain
//! row-major storage with textbook algorithms: Cholesky for solves and
//! determinants, cyclic Jacobi for symmetric eigendecompositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, T::one())
    }

    pub fn scaled_identity(dim: usize, value: T) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = value;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "row {r} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> SquareMatrix<U> {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| U::of(x.as_f64())).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn add_scaled_assign(&mut self, other: &Self, s: T) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + s * b;
        }
    }

    /// `self += s * u v^T`
    pub fn add_outer(&mut self, u: &[T], v: &[T], s: T) {
        let d = self.dim;
        for r in 0..d {
            let ur = s * u[r];
            for c in 0..d {
                self.data[r * d + c] = self.data[r * d + c] + ur * v[c];
            }
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                for c in 0..d {
                    out.data[r * d + c] = out.data[r * d + c] + a * other.data[k * d + c];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d)
            .map(|r| {
                self.data[r * d..(r + 1) * d]
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub(crate) fn mul_vec_into(&self, v: &[T], out: &mut [T]) {
        let d = self.dim;
        for (r, o) in out.iter_mut().enumerate().take(d) {
            let row = &self.data[r * d..(r + 1) * d];
            *o = row
                .iter()
                .zip(v)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// `v^T M v`
    pub fn quad_form(&self, v: &[T]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        for r in 0..d {
            let mut row = T::zero();
            for c in 0..d {
                row = row + self.data[r * d + c] * v[c];
            }
            acc = acc + v[r] * row;
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                out.data[c * d + r] = self.data[r * d + c];
            }
        }
        out
    }

    /// `(M + M^T) / 2`
    pub fn symmetrize(&self) -> Self {
        let half = T::of(0.5);
        let d = self.dim;
        let mut out = self.clone();
        for r in 0..d {
            for c in 0..r {
                let v = (self.data[r * d + c] + self.data[c * d + r]) * half;
                out.data[r * d + c] = v;
                out.data[c * d + r] = v;
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, k| acc + self[(k, k)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn max_asymmetry(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for r in 0..d {
            for c in 0..r {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// numerically positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let d = self.dim;
        let mut l = Self::zeros(d);
        for r in 0..d {
            for c in 0..=r {
                let mut sum = self.data[r * d + c];
                for k in 0..c {
                    sum = sum - l.data[r * d + k] * l.data[c * d + k];
                }
                if r == c {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return None;
                    }
                    l.data[r * d + r] = sum.sqrt();
                } else {
                    l.data[r * d + c] = sum / l.data[c * d + c];
                }
            }
        }
        Some(l)
    }

    fn require_cholesky(&self, what: &str) -> Result<Self> {
        self.cholesky()
            .ok_or_else(|| Error::NotSpd(format!("{what} is not positive definite")))
    }

    /// Solves `M x = b` for symmetric positive definite `M`.
    pub fn solve_spd(&self, b: &[T]) -> Result<Vec<T>> {
        let l = self.require_cholesky("system matrix")?;
        Ok(cholesky_solve(&l, b))
    }

    pub fn inverse_spd(&self) -> Result<Self> {
        let l = self.require_cholesky("matrix")?;
        let d = self.dim;
        let mut inv = Self::zeros(d);
        let mut e = vec![T::zero(); d];
        for c in 0..d {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[c] = T::one();
            let col = cholesky_solve(&l, &e);
            for r in 0..d {
                inv.data[r * d + c] = col[r];
            }
        }
        Ok(inv.symmetrize())
    }

    pub fn log_det_spd(&self) -> Result<T> {
        let l = self.require_cholesky("matrix")?;
        Ok((0..self.dim).fold(T::zero(), |acc, k| acc + l[(k, k)].ln()) * T::of(2.0))
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the eigenvectors as the
    /// columns of the second matrix.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        let d = self.dim;
        let mut a = self.symmetrize();
        let mut v = Self::identity(d);
        let eps = T::epsilon();
        for _sweep in 0..64 {
            let mut off = T::zero();
            for r in 0..d {
                for c in 0..r {
                    off = off + a[(r, c)] * a[(r, c)];
                }
            }
            let scale = a.frobenius_norm();
            if off.sqrt() <= eps * scale || off == T::zero() {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..d {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&x, &y| a[(x, x)].partial_cmp(&a[(y, y)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&k| a[(k, k)]).collect();
        let mut vectors = Self::zeros(d);
        for (new, &old) in order.iter().enumerate() {
            for r in 0..d {
                vectors[(r, new)] = v[(r, old)];
            }
        }
        (values, vectors)
    }

    /// Symmetrizes and clamps every eigenvalue to at least `floor`.
    pub fn floor_eigenvalues(&self, floor: T) -> Self {
        let (values, vectors) = self.symmetric_eigen();
        if values.iter().all(|&l| l >= floor) {
            return self.symmetrize();
        }
        let d = self.dim;
        let mut out = Self::zeros(d);
        for (k, &l) in values.iter().enumerate() {
            let col: Vec<T> = (0..d).map(|r| vectors[(r, k)]).collect();
            out.add_outer(&col, &col, l.max(floor));
        }
        out.symmetrize()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.symmetric_eigen().0[0]
    }
}

fn cholesky_solve<T: Scalar>(l: &SquareMatrix<T>, b: &[T]) -> Vec<T> {
    let d = l.dim;
    let mut y = vec![T::zero(); d];
    for r in 0..d {
        let mut sum = b[r];
        for k in 0..r {
            sum = sum - l[(r, k)] * y[k];
        }
        y[r] = sum / l[(r, r)];
    }
    let mut x = vec![T::zero(); d];
    for r in (0..d).rev() {
        let mut sum = y[r];
        for k in (r + 1)..d {
            sum = sum - l[(k, r)] * x[k];
        }
        x[r] = sum / l[(r, r)];
    }
    x
}

impl<T> std::ops::Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.dim + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for SquareMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.dim + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_spd() -> SquareMatrix<f64> {
        SquareMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = sample_spd();
        let prod = m.matmul(&m.inverse_spd().unwrap());
        let err = prod.sub(&SquareMatrix::identity(3)).frobenius_norm();
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let m = sample_spd();
        let (vals, _) = m.symmetric_eigen();
        let from_eig: f64 = vals.iter().map(|l| l.ln()).sum();
        assert!((m.log_det_spd().unwrap() - from_eig).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let m = sample_spd();
        let (vals, vecs) = m.symmetric_eigen();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let mut rebuilt = SquareMatrix::zeros(3);
        for k in 0..3 {
            let col: Vec<f64> = (0..3).map(|r| vecs[(r, k)]).collect();
            rebuilt.add_outer(&col, &col, vals[k]);
        }
        assert!(rebuilt.sub(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn floor_clamps_negative_spectrum() {
        let m = SquareMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let f = m.floor_eigenvalues(1e-8);
        assert!(f.cholesky().is_some());
        assert!((f[(1, 1)] - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn non_spd_is_rejected() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(m.solve_spd(&[1.0, 1.0]), Err(Error::NotSpd(_))));
    }
}
