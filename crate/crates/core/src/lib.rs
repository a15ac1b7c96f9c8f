//! Finite-dimensional probabilistic sequence models and the constructive
//! conversions between them.
//!
//! The model families are uniform matrix product states ([`Umps`]), uniform
//! Born machines ([`Ubm`]), uniform locally purified states ([`Ulps`]),
//! hidden Markov models ([`Hmm`]), predictive state representations
//! ([`Psr`]), norm-observable operator models ([`Noom`]) and hidden quantum
//! Markov models ([`Hqmm`]), plus the controlled variants in [`controlled`].
//!
//! Every numeric type is generic over a [`Real`] scalar (`f64` by default,
//! `f32` also supported); the aliases below fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > tol)` also rejects NaN

pub mod any;
pub mod controlled;
pub mod convert;
pub mod error;
pub mod evaluate;
pub mod gallery;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod scalar;

pub use any::AnyModel;
pub use error::{Error, Result};
pub use models::{Hmm, Hqmm, KrausSet, ModelKind, MpsChain, Noom, Psr, Ubm, Ulps, Umps};
pub use scalar::Real;

/// Double-precision complex matrix.
pub type ComplexMatrix = linalg::Matrix<f64>;
/// Double-precision complex vector.
pub type ComplexVector = linalg::Vector<f64>;
/// Single-precision complex matrix.
pub type ComplexMatrix32 = linalg::Matrix<f32>;
/// Single-precision complex vector.
pub type ComplexVector32 = linalg::Vector<f32>;
