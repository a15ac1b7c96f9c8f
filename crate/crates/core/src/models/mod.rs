//! Parameter bundles for every model family, their validators, and the
//! common operator view `(σ, {τ_y}, ρ0)` that all of them share once lifted.

mod classical;
mod quantum;

use std::fmt;

pub use classical::{Hmm, MpsChain, Psr, Umps};
pub use quantum::{Hqmm, KrausSet, Noom, Ubm, Ulps};
pub(crate) use quantum::{negativity, unvec_square};

use crate::linalg::{Matrix, Vector};
use crate::scalar::Real;

/// Discriminator shared by the library and the model-file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Umps,
    MpsChain,
    Psr,
    Hmm,
    Ubm,
    Noom,
    Hqmm,
    Ulps,
    Pomdp,
    IoHqmm,
    Qomdp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 11] = [
        ModelKind::Umps,
        ModelKind::MpsChain,
        ModelKind::Psr,
        ModelKind::Hmm,
        ModelKind::Ubm,
        ModelKind::Noom,
        ModelKind::Hqmm,
        ModelKind::Ulps,
        ModelKind::Pomdp,
        ModelKind::IoHqmm,
        ModelKind::Qomdp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Umps => "umps",
            ModelKind::MpsChain => "mps_chain",
            ModelKind::Psr => "psr",
            ModelKind::Hmm => "hmm",
            ModelKind::Ubm => "ubm",
            ModelKind::Noom => "noom",
            ModelKind::Hqmm => "hqmm",
            ModelKind::Ulps => "ulps",
            ModelKind::Pomdp => "pomdp",
            ModelKind::IoHqmm => "io_hqmm",
            ModelKind::Qomdp => "qomdp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, ModelKind::Pomdp | ModelKind::IoHqmm | ModelKind::Qomdp)
    }

    /// Classes whose every parameter choice yields non-negative probabilities.
    pub fn is_constructive(self) -> bool {
        matches!(
            self,
            ModelKind::Hmm
                | ModelKind::Ubm
                | ModelKind::Noom
                | ModelKind::Hqmm
                | ModelKind::Ulps
                | ModelKind::Pomdp
                | ModelKind::IoHqmm
                | ModelKind::Qomdp
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated definitional constraint and how far off it is.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation<T: Real = f64> {
    pub constraint: &'static str,
    pub residual: T,
}

impl<T: Real> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} residual {}", self.constraint, self.residual)
    }
}

/// Every violated invariant of a model; empty means valid.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T: Real = f64> {
    pub violations: Vec<Violation<T>>,
}

impl<T: Real> Default for ValidationReport<T> {
    fn default() -> Self {
        Self {
            violations: Vec::new(),
        }
    }
}

impl<T: Real> ValidationReport<T> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Records `constraint` when `residual` exceeds `tol` (NaN counts as a
    /// violation).
    pub(crate) fn check(&mut self, constraint: &'static str, residual: T, tol: T) {
        if !(residual <= tol) {
            self.violations.push(Violation {
                constraint,
                residual,
            });
        }
    }

    pub fn get(&self, constraint: &str) -> Option<&Violation<T>> {
        self.violations.iter().find(|v| v.constraint == constraint)
    }

    pub fn merge(&mut self, other: ValidationReport<T>) {
        self.violations.extend(other.violations);
    }

    /// `Err(InvalidModel)` listing the violations, if any.
    pub fn into_result(self) -> crate::Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(crate::Error::InvalidModel(self.to_string()))
        }
    }
}

impl<T: Real> fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions<T: Real = f64> {
    pub tol: T,
    /// Additionally require every parameter to be real.
    pub strict_real: bool,
}

impl<T: Real> Default for ValidateOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::validate_tol(),
            strict_real: false,
        }
    }
}

impl<T: Real> ValidateOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            strict_real: false,
        }
    }

    pub fn strict_real(mut self) -> Self {
        self.strict_real = true;
        self
    }
}

/// Checks the definitional constraints of a model class.
pub trait Validate<T: Real> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T>;

    fn validate(&self, tol: T) -> ValidationReport<T> {
        self.validate_with(&ValidateOptions::with_tol(tol))
    }

    fn ensure_valid(&self, tol: T) -> crate::Result<()> {
        self.validate(tol).into_result()
    }
}

/// The common linear representation `score(y1..yT) = σ† τ_{yT} ⋯ τ_{y1} ρ0`.
///
/// Quadratic models (uBM, NOOM, HQMM, uLPS) expose their Kronecker-lifted
/// form in dimension `n²`, where states are vectorized matrices.
pub trait OperatorModel<T: Real> {
    fn obs_count(&self) -> usize;

    /// Dimension of the (possibly lifted) state space.
    fn operator_dim(&self) -> usize;

    /// Materialized observable operator `τ_y`.
    fn observable(&self, y: usize) -> Matrix<T>;

    /// `τ_y x`. Implementations avoid materializing `τ_y` where they can.
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        self.observable(y).mul_vec(x)
    }

    /// `τ_y† s`.
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        self.observable(y).adjoint_mul_vec(s)
    }

    /// Evaluation functional σ.
    fn functional(&self) -> Vector<T>;

    /// Initial state ρ0.
    fn initial_state(&self) -> Vector<T>;

    /// `τ = Σ_y τ_y`.
    fn transfer_operator(&self) -> Matrix<T> {
        let n = self.operator_dim();
        (0..self.obs_count()).fold(Matrix::zeros(n, n), |acc, y| &acc + &self.observable(y))
    }

    /// `τ x`.
    fn apply_transfer(&self, x: &Vector<T>) -> Vector<T> {
        (0..self.obs_count()).fold(Vector::zeros(self.operator_dim()), |acc, y| {
            &acc + &self.apply_observable(y, x)
        })
    }

    /// `τ† s`.
    fn apply_transfer_adjoint(&self, s: &Vector<T>) -> Vector<T> {
        (0..self.obs_count()).fold(Vector::zeros(self.operator_dim()), |acc, y| {
            &acc + &self.apply_observable_adjoint(y, s)
        })
    }
}

pub(crate) fn check_finite_matrix<T: Real>(m: &Matrix<T>, what: &str) -> crate::Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("non-finite entry in {what}")))
    }
}

pub(crate) fn check_finite_vector<T: Real>(v: &Vector<T>, what: &str) -> crate::Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::InvalidParameter(format!("non-finite entry in {what}")))
    }
}

pub(crate) fn shape_err(msg: String) -> crate::Error {
    crate::Error::DimensionMismatch(msg)
}
