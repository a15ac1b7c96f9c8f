use thiserror::Error;

/// Errors raised by model construction, evaluation and conversion.
///
/// Numeric diagnostics are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate spectrum: estimated |λ2|/|λ1| = {ratio}")]
    DegenerateSpectrum { ratio: f64 },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("map is not completely positive (smallest Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("dominant eigenvalue {re} + {im}i is not real positive")]
    NonPositiveEigenvalue { re: f64, im: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("prefix has zero probability at position {position}")]
    ZeroProbabilityPrefix { position: usize },

    #[error("fixed point is orthogonal to the initial state (overlap {overlap:e})")]
    OrthogonalBoundary { overlap: f64 },

    #[error("enumeration of {count} sequences exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("negative conditional probability {value:e} at position {position}")]
    NegativeConditional { position: usize, value: f64 },

    #[error("symbol {symbol} out of range for alphabet of size {obs_count}")]
    SymbolOutOfRange { symbol: usize, obs_count: usize },

    #[error("action {action} out of range for {action_count} actions")]
    ActionOutOfRange { action: usize, action_count: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("filter state does not belong to this model: {0}")]
    StateMismatch(String),
}

impl Error {
    /// Stable snake_case tag for machine-readable diagnostics.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DegenerateSpectrum { .. } => "degenerate_spectrum",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NotCompletelyPositive { .. } => "not_completely_positive",
            Error::NonPositiveEigenvalue { .. } => "non_positive_eigenvalue",
            Error::InvalidModel(_) => "invalid_model",
            Error::ZeroProbabilityPrefix { .. } => "zero_probability_prefix",
            Error::OrthogonalBoundary { .. } => "orthogonal_boundary",
            Error::TooLarge { .. } => "too_large",
            Error::NegativeConditional { .. } => "negative_conditional",
            Error::SymbolOutOfRange { .. } => "symbol_out_of_range",
            Error::ActionOutOfRange { .. } => "action_out_of_range",
            Error::EmptySequence => "empty_sequence",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::StateMismatch(_) => "state_mismatch",
        }
    }

    /// True for failures of the numerical routines themselves, as opposed to
    /// malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::DegenerateSpectrum { .. }
                | Error::NotHermitian { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NotCompletelyPositive { .. }
                | Error::NonPositiveEigenvalue { .. }
                | Error::ZeroProbabilityPrefix { .. }
                | Error::OrthogonalBoundary { .. }
                | Error::NegativeConditional { .. }
                | Error::TooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
