//! Real scalar abstraction shared by every model.
//!
//! All numerics are written against [`Real`], a thin extension of
//! [`num_traits::Float`] that also carries the default tolerances used by the
//! iterative routines. Complex entries are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Residual target for dominant eigenpair iteration.
    fn eig_tol() -> Self;
    /// Relative off-diagonal threshold for the Jacobi sweep.
    fn jacobi_tol() -> Self;
    /// Default tolerance for model validation.
    fn validate_tol() -> Self;
    /// Absolute part of mixed comparisons.
    fn atol() -> Self;
    /// Relative part of mixed comparisons.
    fn rtol() -> Self;
    /// Spectra with `|λ2|/|λ1|` above `1 - degeneracy_margin()` are rejected.
    fn degeneracy_margin() -> Self;

    /// Converts an `f64` literal. Panics only for non-representable literals,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn eig_tol() -> Self {
        1e-12
    }
    fn jacobi_tol() -> Self {
        1e-13
    }
    fn validate_tol() -> Self {
        1e-9
    }
    fn atol() -> Self {
        1e-10
    }
    fn rtol() -> Self {
        1e-9
    }
    fn degeneracy_margin() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn eig_tol() -> Self {
        1e-5
    }
    fn jacobi_tol() -> Self {
        1e-6
    }
    fn validate_tol() -> Self {
        1e-4
    }
    fn atol() -> Self {
        1e-5
    }
    fn rtol() -> Self {
        1e-4
    }
    fn degeneracy_margin() -> Self {
        1e-4
    }
}

/// Shorthand for building a complex constant from `f64` parts.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// `|a - b| <= atol + rtol * max(|a|, |b|)`.
pub fn close<T: Real>(a: T, b: T, atol: T, rtol: T) -> bool {
    (a - b).abs() <= atol + rtol * a.abs().max(b.abs())
}

/// [`close`] with the scalar's default tolerances.
pub fn approx_eq<T: Real>(a: T, b: T) -> bool {
    close(a, b, T::atol(), T::rtol())
}
