//! Spectral routines: Hermitian eigendecomposition by cyclic Jacobi sweeps,
//! Hermitian matrix functions, and the dominant left eigenpair of a general
//! square matrix by power iteration.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real = f64> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V · diag(f(λ)) · V†`.
    pub fn apply_fn(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        Matrix::from_fn(n, n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| {
                acc + self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k]
            })
        })
    }
}

/// Eigendecomposition of a Hermitian matrix. Only the Hermitian part of `m`
/// is used; callers check Hermiticity themselves when it matters.
pub fn hermitian_eigen<T: Real>(m: &Matrix<T>) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = Matrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let threshold = T::jacobi_tol() * scale;

    for _ in 0..MAX_JACOBI_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        canonicalize_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing `a[p][q]`: a phase rotation makes the
/// pivot real, then a real Givens rotation diagonalizes the 2×2 block.
fn jacobi_rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * r);
    let t = if theta == T::zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = (t * t + T::one()).sqrt().recip();
    let s = t * c;
    // U = diag(1, conj(phase)) · [[c, s], [-s, c]]
    let u_pp = Complex::new(c, T::zero());
    let u_pq = Complex::new(s, T::zero());
    let u_qp = phase.conj() * (-s);
    let u_qq = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Rotates `v` so its largest-magnitude component is real and positive.
/// Ties go to the lowest index.
pub fn canonicalize_phase<T: Real>(v: &mut Vector<T>) {
    let max = v.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    if max == T::zero() {
        return;
    }
    let cutoff = max * (T::one() - T::lit(1e3) * T::epsilon());
    let pivot = v.iter().position(|z| z.norm() >= cutoff).unwrap_or(0);
    let z = v[pivot];
    let rot = z.conj() / z.norm();
    *v = v.scale(rot);
    v[pivot] = Complex::new(v[pivot].re, T::zero());
}

fn check_hermitian<T: Real>(p: &Matrix<T>, tol: T) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            p.rows(),
            p.cols()
        )));
    }
    let residual = p.hermitian_residual();
    if residual > tol * T::one().max(p.max_abs()) {
        return Err(Error::NotHermitian {
            residual: residual.as_f64(),
        });
    }
    Ok(())
}

/// Positive semidefinite square root of a Hermitian matrix.
pub fn herm_sqrt<T: Real>(p: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    check_hermitian(p, tol)?;
    let eig = hermitian_eigen(p)?;
    if let Some(&min) = eig.values.first() {
        if min < -tol {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.as_f64(),
            });
        }
    }
    Ok(eig.apply_fn(|l| l.max(T::zero()).sqrt()))
}

/// Inverse square root of a Hermitian positive definite matrix.
pub fn herm_inv_sqrt<T: Real>(p: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    Ok(herm_sqrt_pair(p, tol)?.1)
}

/// `(P^{1/2}, P^{-1/2})` from a single eigendecomposition.
pub fn herm_sqrt_pair<T: Real>(p: &Matrix<T>, tol: T) -> Result<(Matrix<T>, Matrix<T>)> {
    check_hermitian(p, tol)?;
    let eig = hermitian_eigen(p)?;
    if let Some(&min) = eig.values.first() {
        if min <= tol {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.as_f64(),
            });
        }
    }
    Ok((eig.apply_fn(|l| l.sqrt()), eig.apply_fn(|l| l.sqrt().recip())))
}

/// Hermitian within `tol` and no eigenvalue below `-tol`.
pub fn is_psd<T: Real>(m: &Matrix<T>, tol: T) -> bool {
    if check_hermitian(m, tol).is_err() {
        return false;
    }
    match hermitian_eigen(m) {
        Ok(eig) => eig.values.first().is_none_or(|&l| l >= -tol),
        Err(_) => false,
    }
}

/// Dominant eigenvalue and normalized left eigenvector of a transfer
/// operator, with an estimate of how well separated it is.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointResult<T: Real = f64> {
    /// λ*, satisfying `σ*† M = λ* σ*†`.
    pub eigenvalue: Complex<T>,
    /// σ*, unit 2-norm, phase-canonical.
    pub fixed_point: Vector<T>,
    /// Estimate of `|λ2| / |λ1|`, in `[0, 1)`.
    pub gap_ratio: T,
    /// Power iterations spent on the left eigenvector.
    pub iterations: usize,
    /// Final `‖M† σ* − conj(λ*) σ*‖`.
    pub residual: T,
}

impl<T: Real> FixedPointResult<T> {
    /// `1 - |λ2|/|λ1|`.
    pub fn spectral_gap(&self) -> T {
        T::one() - self.gap_ratio
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions<T: Real = f64> {
    pub tol: T,
    pub max_iter: usize,
    /// Reject spectra with `|λ2|/|λ1| > 1 - degeneracy_margin`.
    pub degeneracy_margin: T,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::eig_tol(),
            max_iter: 100_000,
            degeneracy_margin: T::degeneracy_margin(),
        }
    }
}

impl<T: Real> EigenOptions<T> {
    pub fn with_tol(tol: T, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            ..Self::default()
        }
    }
}

/// [`dominant_left_eigenpair_with`] with default degeneracy threshold.
pub fn dominant_left_eigenpair<T: Real>(
    m: &Matrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<FixedPointResult<T>> {
    dominant_left_eigenpair_with(m, &EigenOptions::with_tol(tol, max_iter))
}

/// Power iteration on `M†` with 2-norm renormalization.
///
/// The second eigenvalue magnitude is estimated by power iteration on the
/// deflated operator `M − λ r σ†/(σ† r)`, where `r` is the matching right
/// eigenvector.
pub fn dominant_left_eigenpair_with<T: Real>(
    m: &Matrix<T>,
    opts: &EigenOptions<T>,
) -> Result<FixedPointResult<T>> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "dominant eigenpair of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let n = m.rows();
    let left = power_iterate(|v| m.adjoint_mul_vec(v), start_vector(n, 0), opts)?;
    let lambda = left.rayleigh.conj();
    if lambda.norm() == T::zero() {
        return Err(Error::DegenerateSpectrum { ratio: 1.0 });
    }
    let right = power_iterate(|v| m.mul_vec(v), start_vector(n, 1), opts)?;

    let sigma = left.vector;
    let r = right.vector;
    let overlap = sigma.dot(&r);
    if overlap.norm() < T::epsilon().sqrt() {
        // Left and right dominant vectors orthogonal: defective leading block.
        return Err(Error::DegenerateSpectrum { ratio: 1.0 });
    }
    let second = deflated_growth(m, lambda, &sigma, &r, overlap);
    let ratio = second / lambda.norm();
    if ratio > T::one() - opts.degeneracy_margin {
        return Err(Error::DegenerateSpectrum {
            ratio: ratio.as_f64(),
        });
    }

    let mut fixed_point = sigma;
    canonicalize_phase(&mut fixed_point);
    let residual = (&m.adjoint_mul_vec(&fixed_point) - &fixed_point.scale(lambda.conj())).norm2();
    Ok(FixedPointResult {
        eigenvalue: lambda,
        fixed_point,
        gap_ratio: ratio.max(T::zero()),
        iterations: left.iterations,
        residual,
    })
}

struct PowerOutcome<T: Real> {
    vector: Vector<T>,
    rayleigh: Complex<T>,
    iterations: usize,
}

fn power_iterate<T: Real>(
    apply: impl Fn(&Vector<T>) -> Vector<T>,
    start: Vector<T>,
    opts: &EigenOptions<T>,
) -> Result<PowerOutcome<T>> {
    let mut v = start;
    let mut history: Vec<T> = Vec::new();
    let mut residual = T::infinity();
    for k in 1..=opts.max_iter {
        let w = apply(&v);
        let mu = v.dot(&w);
        residual = (&w - &v.scale(mu)).norm2();
        if residual <= opts.tol * T::one().max(mu.norm()) {
            return Ok(PowerOutcome {
                vector: v,
                rayleigh: mu,
                iterations: k,
            });
        }
        match w.normalized() {
            Some(next) => v = next,
            // M† v = 0 exactly: the start vector lies in the kernel.
            None => return Err(Error::DegenerateSpectrum { ratio: 1.0 }),
        }
        history.push(residual);
    }
    // Distinguish slow convergence from a residual that never decays, which
    // signals several eigenvalues of maximal modulus.
    let window = history.len().min(1000);
    if window >= 2 {
        let first = history[history.len() - window];
        let last = history[history.len() - 1];
        let rate = if first > T::zero() && last > T::zero() {
            (last / first).ln() / T::from_usize_lossy(window - 1)
        } else {
            T::neg_infinity()
        };
        if rate.exp() > T::one() - opts.degeneracy_margin {
            return Err(Error::DegenerateSpectrum {
                ratio: rate.exp().min(T::one()).as_f64(),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: residual.as_f64(),
    })
}

const DEFLATION_STEPS: usize = 2000;

/// Asymptotic growth rate of the deflated operator, i.e. `|λ2|`.
fn deflated_growth<T: Real>(
    m: &Matrix<T>,
    lambda: Complex<T>,
    sigma: &Vector<T>,
    r: &Vector<T>,
    overlap: Complex<T>,
) -> T {
    let n = m.rows();
    if n == 1 {
        return T::zero();
    }
    let deflate = |u: &Vector<T>| -> Vector<T> {
        let mu = m.mul_vec(u);
        let coeff = lambda * sigma.dot(u) / overlap;
        &mu - &r.scale(coeff)
    };
    let project = |u: &Vector<T>| -> Vector<T> { u - &r.scale(sigma.dot(u) / overlap) };
    let floor = T::epsilon() * T::epsilon() * lambda.norm();
    let mut u = match project(&start_vector(n, 2)).normalized() {
        Some(u) => u,
        None => return T::zero(),
    };
    let mut log_growth = T::zero();
    let mut counted = 0usize;
    for k in 0..DEFLATION_STEPS {
        let w = deflate(&u);
        let g = w.norm2();
        if g <= floor {
            return T::zero();
        }
        if k >= DEFLATION_STEPS / 2 {
            log_growth += g.ln();
            counted += 1;
        }
        u = w.scale_real(g.recip());
    }
    (log_growth / T::from_usize_lossy(counted)).exp()
}

/// Deterministic, generic-position starting vector.
fn start_vector<T: Real>(n: usize, salt: usize) -> Vector<T> {
    let phi = 0.618_033_988_749_895_f64;
    let sqrt2 = std::f64::consts::SQRT_2 - 1.0;
    let v = Vector::from_fn(n, |i| {
        let k = (i + 1 + 7 * salt) as f64;
        let re = 1.0 + 0.5 * (k * phi).fract();
        let im = 0.25 * (k * sqrt2).fract() - 0.125;
        Complex::new(T::lit(re), T::lit(im))
    });
    v.normalized().unwrap_or_else(|| Vector::from_fn(n, |_| Complex::one()))
}
