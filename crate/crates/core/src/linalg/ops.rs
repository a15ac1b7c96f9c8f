use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Real;

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (br, bc) = b.shape();
    Matrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of vectors.
pub fn kron_vec<T: Real>(a: &Vector<T>, b: &Vector<T>) -> Vector<T> {
    let n = b.dim();
    Vector::from_fn(a.dim() * n, |i| a[i / n] * b[i % n])
}

/// Column-first stacking of a matrix into a vector.
pub fn vectorize<T: Real>(m: &Matrix<T>) -> Vector<T> {
    let (r, c) = m.shape();
    Vector::from_fn(r * c, |k| m[(k % r, k / r)])
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &Vector<T>, rows: usize, cols: usize) -> Result<Matrix<T>> {
    if v.dim() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape a vector of length {} into {rows}x{cols}",
            v.dim()
        )));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| v[i + rows * j]))
}

/// Reshuffles an `n²×n²` Liouville matrix into its Choi matrix (and back).
///
/// With row index `a·n + b` and column index `c·n + d`, the entry moves to
/// row `d·n + b`, column `c·n + a`. Under this map
/// `Σ conj(K)⊗K ↦ Σ vec(K)·vec(K)†`, and applying it twice is the identity.
pub fn choi_reshuffle<T: Real>(l: &Matrix<T>, n: usize) -> Result<Matrix<T>> {
    let nn = n * n;
    if l.shape() != (nn, nn) {
        return Err(Error::DimensionMismatch(format!(
            "choi reshuffle of a {}x{} matrix with n = {n}",
            l.rows(),
            l.cols()
        )));
    }
    let mut out = Matrix::zeros(nn, nn);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    out[(d * n + b, c * n + a)] = l[(a * n + b, c * n + d)];
                }
            }
        }
    }
    Ok(out)
}

/// Integer square root for perfect squares, used to recover `n` from `n²`.
pub fn exact_sqrt(nn: usize) -> Option<usize> {
    let n = (nn as f64).sqrt().round() as usize;
    (n * n == nn).then_some(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identity_and_scalar() {
        let i2 = Matrix::<f64>::identity(2);
        assert_eq!(kron(&i2, &i2), Matrix::identity(4));
        let m = Matrix::<f64>::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64 - 1.0));
        let two = Matrix::from_real_rows(&[&[2.0]]);
        assert_eq!(kron(&two, &m), m.scale_real(2.0));
    }

    #[test]
    fn kron_swap_permutation() {
        let x = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let k = kron(&x, &Matrix::identity(2));
        // Worked by hand: the block [[0, I], [I, 0]].
        let expected = Matrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn vectorize_is_column_first() {
        let m = Matrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(vectorize(&m), Vector::from_real(&[1.0, 3.0, 2.0, 4.0]));
        let back = unvectorize(&Vector::<f64>::from_real(&[1.0, 3.0, 2.0, 4.0]), 2, 2).unwrap();
        assert_eq!(back, m);
        assert!(unvectorize(&Vector::<f64>::zeros(3), 2, 2).is_err());
    }

    #[test]
    fn choi_of_identity_channel() {
        let l = kron(&Matrix::<f64>::identity(2), &Matrix::identity(2));
        let choi = choi_reshuffle(&l, 2).unwrap();
        let vi = vectorize(&Matrix::<f64>::identity(2));
        assert_eq!(choi, vi.outer(&vi));
        assert!(choi_reshuffle(&Matrix::<f64>::identity(3), 2).is_err());
    }

    #[test]
    fn kron_vec_matches_matrix_kron() {
        let a = Vector::<f64>::from_fn(2, |i| c(i as f64, 1.0));
        let b = Vector::<f64>::from_fn(3, |i| c(1.0, -(i as f64)));
        let am = Matrix::from_fn(2, 1, |i, _| a[i]);
        let bm = Matrix::from_fn(3, 1, |i, _| b[i]);
        assert_eq!(kron_vec(&a, &b), kron(&am, &bm).column(0));
    }

    #[test]
    fn exact_sqrt_of_squares() {
        assert_eq!(exact_sqrt(9), Some(3));
        assert_eq!(exact_sqrt(1), Some(1));
        assert_eq!(exact_sqrt(8), None);
    }
}
