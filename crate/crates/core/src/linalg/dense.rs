use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real = f64> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<T: Real = f64> {
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries; rejects length mismatch and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Real matrix from nested rows of `f64`. Panics on ragged input; meant
    /// for literals in tests and the gallery.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| Complex::new(T::lit(rows[i][j]), T::zero()))
    }

    pub fn diag(entries: &[Complex<T>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn set_column(&mut self, j: usize, v: &Vector<T>) {
        assert_eq!(v.dim(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// `max |self - other|` entrywise; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// Largest imaginary part magnitude.
    pub fn max_imag(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.im.abs()))
    }

    /// `max |m - m†|` entrywise.
    pub fn hermitian_residual(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut r = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn mul_vec(&self, v: &Vector<T>) -> Vector<T> {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        Vector::from_fn(self.rows, |i| {
            self.row(i)
                .iter()
                .zip(v.as_slice())
                .fold(Complex::zero(), |acc, (a, b)| acc + a * b)
        })
    }

    /// `self† v` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &Vector<T>) -> Vector<T> {
        assert_eq!(self.rows, v.dim(), "matrix-vector shape mismatch");
        let mut out = vec![Complex::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Vector::from_vec(out)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Mul<&Vector<T>> for &Matrix<T> {
    type Output = Vector<T>;
    fn mul(self, rhs: &Vector<T>) -> Vector<T> {
        self.mul_vec(rhs)
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Vector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![Complex::zero(); dim],
        }
    }

    pub fn from_vec(data: Vec<Complex<T>>) -> Self {
        Self { data }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> Complex<T>) -> Self {
        Self {
            data: (0..dim).map(f).collect(),
        }
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Self::from_fn(xs.len(), |i| Complex::new(T::lit(xs[i]), T::zero()))
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v[i] = Complex::one();
        v
    }

    pub fn ones(dim: usize) -> Self {
        Self {
            data: vec![Complex::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.data.iter()
    }

    /// `self† other` (conjugate-linear in `self`).
    pub fn dot(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Bilinear `selfᵀ other`.
    pub fn dot_transpose(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn sum(&self) -> Complex<T> {
        self.data.iter().copied().sum()
    }

    pub fn norm2(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn norm1(&self) -> T {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Unit 2-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm2();
        if n > T::zero() && n.is_finite() {
            Some(self.scale_real(n.recip()))
        } else {
            None
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn max_imag(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.im.abs()))
    }

    /// Outer product `self · other†`.
    pub fn outer(&self, other: &Self) -> Matrix<T> {
        Matrix::from_fn(self.dim(), other.dim(), |i, j| self[i] * other[j].conj())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real parts as `f64`, for reporting.
    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re.as_f64()).collect()
    }
}

impl<T: Real> Index<usize> for Vector<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, i: usize) -> &Complex<T> {
        &self.data[i]
    }
}

impl<T: Real> IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.data[i]
    }
}

impl<T: Real> Add for &Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: &Vector<T>) -> Vector<T> {
        assert_eq!(self.dim(), rhs.dim(), "vector sum dimension mismatch");
        Vector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: &Vector<T>) -> Vector<T> {
        assert_eq!(self.dim(), rhs.dim(), "vector difference dimension mismatch");
        Vector {
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Sum of equally shaped matrices; `None` for an empty iterator.
pub fn sum_matrices<'a, T: Real>(ms: impl IntoIterator<Item = &'a Matrix<T>>) -> Option<Matrix<T>> {
    let mut it = ms.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, m| &acc + m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_and_adjoints() {
        let a = Matrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ab = &a * &b;
        assert_eq!(ab, Matrix::from_real_rows(&[&[2.0, 1.0], &[4.0, 3.0]]));
        let v = Vector::<f64>::from_real(&[1.0, -1.0]);
        assert_eq!(a.mul_vec(&v), Vector::from_real(&[-1.0, -1.0]));
        assert_eq!(a.adjoint_mul_vec(&v), a.adjoint().mul_vec(&v));
        assert_eq!(a.trace().re, 5.0);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(matches!(
            Matrix::<f64>::from_row_major(2, 2, vec![Complex::zero(); 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(Matrix::<f64>::from_row_major(1, 1, vec![Complex::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn hermitian_part_is_hermitian() {
        let m = Matrix::<f64>::from_fn(3, 3, |i, j| Complex::new(i as f64 - j as f64 * 0.5, (i * j) as f64));
        assert!(m.hermitian_residual() > 0.1);
        assert!(m.hermitian_part().hermitian_residual() < 1e-15);
    }
}
