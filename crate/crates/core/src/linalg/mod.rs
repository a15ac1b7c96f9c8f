//! Dense complex linear algebra used by every model: Kronecker products,
//! column-first vectorization, the Choi reshuffle, Hermitian matrix functions
//! and dominant eigenpairs of transfer operators.

mod dense;
mod ops;
mod spectral;

pub use dense::{sum_matrices, Matrix, Vector};
pub use ops::{choi_reshuffle, exact_sqrt, kron, kron_vec, unvectorize, vectorize};
pub use spectral::{
    canonicalize_phase, dominant_left_eigenpair, dominant_left_eigenpair_with, herm_inv_sqrt,
    herm_sqrt, herm_sqrt_pair, hermitian_eigen, is_psd, EigenOptions, FixedPointResult,
    HermitianEigen,
};
