//! Representation lifts and the fixed-point normalizations that turn
//! non-terminating uMPS / uBM / uLPS into PSR / NOOM / HQMM.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::evaluate::transfer_fixed_point;
use crate::linalg::{
    choi_reshuffle, exact_sqrt, herm_sqrt, herm_sqrt_pair, hermitian_eigen, kron, kron_vec,
    unvectorize, vectorize, EigenOptions, FixedPointResult, Matrix, Vector,
};
use crate::models::{
    Hmm, Hqmm, KrausSet, Noom, OperatorModel, Psr, Ubm, Ulps, Umps, Validate,
};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct ConvertOptions<T: Real = f64> {
    pub eigen: EigenOptions<T>,
    /// Validation tolerance for inputs, and the eigenvalue floor below which
    /// a (unit-norm) fixed-point matrix counts as singular.
    pub tol: T,
}

impl<T: Real> Default for ConvertOptions<T> {
    fn default() -> Self {
        Self {
            eigen: EigenOptions::default(),
            tol: T::validate_tol(),
        }
    }
}

/// Diagnostics of a fixed-point conversion.
#[derive(Clone, Debug, PartialEq)]
pub struct ConversionReport<T: Real = f64> {
    /// λ* for uMPS, `√λ*` for the quadratic models.
    pub rescale_factor: Complex<T>,
    /// `S = σ*^{1/2}` when a similarity transform was applied.
    pub similarity: Option<Matrix<T>>,
    pub fixed_point: FixedPointResult<T>,
    pub residuals: Vec<(&'static str, T)>,
}

impl<T: Real> ConversionReport<T> {
    pub fn residual(&self, name: &str) -> Option<T> {
        self.residuals.iter().find(|(n, _)| *n == name).map(|&(_, r)| r)
    }
}

/// Observable-operator form `τ_y = diag(C_{y,:}) A`, `σ = 𝟙`.
pub fn hmm_to_psr<T: Real>(h: &Hmm<T>) -> Result<Psr<T>> {
    h.ensure_valid(T::validate_tol())?;
    let ops = (0..h.emission().rows()).map(|y| h.observable_operator(y)).collect();
    Psr::new(Vector::ones(h.state_dim()), ops, h.x0().clone())
}

/// `(vec(𝕀), {conj(φ_y) ⊗ φ_y}, conj(ψ0) ⊗ ψ0)`.
pub fn noom_to_psr<T: Real>(m: &Noom<T>) -> Result<Psr<T>> {
    m.ensure_valid(T::validate_tol())?;
    Psr::new(m.functional(), lift_ops(m.phis()), kron_vec(&m.psi0().conj(), m.psi0()))
}

/// The Kronecker lift of a uBM. The result is a uMPS, not a normalized PSR.
pub fn ubm_to_psr<T: Real>(b: &Ubm<T>) -> Result<Umps<T>> {
    Umps::new(
        kron_vec(&b.alpha().conj(), b.alpha()),
        lift_ops(b.cores()),
        kron_vec(&b.omega0().conj(), b.omega0()),
    )
}

fn lift_ops<T: Real>(ops: &[Matrix<T>]) -> Vec<Matrix<T>> {
    ops.iter().map(|a| kron(&a.conj(), a)).collect()
}

/// Rescales by `1/λ*`, replaces σ by the fixed point σ*, and rescales ρ0
/// so that `σ*† x0 = 1`.
pub fn umps_to_psr<T: Real>(u: &Umps<T>, opts: &ConvertOptions<T>) -> Result<(Psr<T>, ConversionReport<T>)> {
    let fp = transfer_fixed_point(u, &opts.eigen)?;
    let lambda = fp.eigenvalue;
    let sigma = fp.fixed_point.clone();
    let overlap = sigma.dot(u.rho0());
    if overlap.norm() <= opts.tol * u.rho0().norm2() {
        return Err(Error::OrthogonalBoundary {
            overlap: overlap.norm().as_f64(),
        });
    }
    let inv = lambda.inv();
    let ops = u.cores().iter().map(|a| a.scale(inv)).collect();
    let psr = Psr::new(sigma, ops, u.rho0().scale(overlap.inv()))?;
    let residuals = vec![
        ("initial_normalization", psr.initial_normalization_residual()),
        ("marginal_normalization", psr.marginal_normalization_residual()),
        ("fixed_point", fp.residual),
    ];
    Ok((
        psr,
        ConversionReport {
            rescale_factor: lambda,
            similarity: None,
            fixed_point: fp,
            residuals,
        },
    ))
}

/// Real positive λ* of a CP transfer operator, or an error.
fn cp_eigenvalue<T: Real>(lambda: Complex<T>) -> Result<T> {
    if lambda.im.abs() >= T::lit(1e-8) * lambda.norm() || !(lambda.re > T::zero()) {
        return Err(Error::NonPositiveEigenvalue {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
        });
    }
    Ok(lambda.re)
}

/// `S = σ*^{1/2}` and `S⁻¹` for the fixed point reshaped to a matrix.
struct Similarity<T: Real> {
    s: Matrix<T>,
    s_inv: Matrix<T>,
}

fn fixed_point_similarity<T: Real>(fp: &FixedPointResult<T>, n: usize, tol: T) -> Result<Similarity<T>> {
    let raw = unvectorize(&fp.fixed_point, n, n)?;
    // Remove any global phase so the trace is real positive; a PSD fixed
    // point is then Hermitian up to roundoff.
    let tr = raw.trace();
    if tr.norm() == T::zero() {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: 0.0,
        });
    }
    let sigma = raw.scale(tr.conj() / tr.norm()).hermitian_part();
    let (s, s_inv) = herm_sqrt_pair(&sigma, tol * sigma.frobenius_norm())?;
    Ok(Similarity { s, s_inv })
}

/// `φ'_y = S (φ_y / √λ*) S⁻¹`, `ψ'0 = S ω0 / ‖S ω0‖`.
pub fn ubm_to_noom<T: Real>(b: &Ubm<T>, opts: &ConvertOptions<T>) -> Result<(Noom<T>, ConversionReport<T>)> {
    let fp = transfer_fixed_point(b, &opts.eigen)?;
    let lambda = cp_eigenvalue(fp.eigenvalue)?;
    let sim = fixed_point_similarity(&fp, b.bond_dim(), opts.tol)?;
    let scale = lambda.sqrt().recip();
    let phis: Vec<Matrix<T>> = b
        .cores()
        .iter()
        .map(|a| sim.s.matmul(a).matmul(&sim.s_inv).scale_real(scale))
        .collect();
    let psi = sim.s.mul_vec(b.omega0());
    let psi = psi.normalized().ok_or(Error::OrthogonalBoundary { overlap: 0.0 })?;
    let noom = Noom::new(phis, psi)?;
    let completeness = noom.completeness().max_abs_diff(&Matrix::identity(b.bond_dim()));
    let residuals = vec![("completeness", completeness), ("fixed_point", fp.residual)];
    Ok((
        noom,
        ConversionReport {
            rescale_factor: Complex::new(lambda.sqrt(), T::zero()),
            similarity: Some(sim.s),
            fixed_point: fp,
            residuals,
        },
    ))
}

/// `L = Σ_β conj(K_β) ⊗ K_β`.
pub fn kraus_to_liouville<T: Real>(k: &KrausSet<T>) -> Matrix<T> {
    k.liouville()
}

/// Kraus operators `√λ_β · unvec(v_β)` from the Choi eigenpairs with
/// `λ_β > tol`, largest first.
pub fn liouville_to_kraus<T: Real>(l: &Matrix<T>, tol: T) -> Result<KrausSet<T>> {
    let n = exact_sqrt(l.rows())
        .filter(|_| l.is_square())
        .ok_or_else(|| Error::DimensionMismatch(format!("{}x{} is not a Liouville matrix", l.rows(), l.cols())))?;
    let choi = choi_reshuffle(l, n)?;
    let herm = choi.hermitian_residual();
    if herm > tol * T::one().max(choi.max_abs()) {
        return Err(Error::NotHermitian {
            residual: herm.as_f64(),
        });
    }
    let eig = hermitian_eigen(&choi.hermitian_part())?;
    let min = eig.values.first().copied().unwrap_or_else(T::zero);
    if min < -tol {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: min.as_f64(),
        });
    }
    let mut ops: Vec<Matrix<T>> = Vec::new();
    for (j, &lam) in eig.values.iter().enumerate().rev() {
        if lam > tol {
            let v = eig.vectors.column(j).scale_real(lam.sqrt());
            ops.push(unvectorize(&v, n, n)?);
        }
    }
    if ops.is_empty() {
        ops.push(Matrix::zeros(n, n));
    }
    KrausSet::new(ops)
}

/// Number of Choi eigenvalues above `tol`.
pub fn choi_rank<T: Real>(l: &Matrix<T>, tol: T) -> Result<usize> {
    let n = exact_sqrt(l.rows())
        .ok_or_else(|| Error::DimensionMismatch(format!("{} is not a perfect square", l.rows())))?;
    let choi = choi_reshuffle(l, n)?;
    let eig = hermitian_eigen(&choi.hermitian_part())?;
    Ok(eig.values.iter().filter(|&&v| v > tol).count())
}

/// Identity left boundary; right boundary `{ρ0^{1/2}}` so that
/// `Σ K_R K_R† = ρ0`.
pub fn hqmm_to_ulps<T: Real>(h: &Hqmm<T>) -> Result<Ulps<T>> {
    h.ensure_valid(T::validate_tol())?;
    let n = h.state_dim();
    let root = herm_sqrt(&h.rho0_matrix(), T::validate_tol())?;
    Ulps::new(
        KrausSet::single(Matrix::identity(n))?,
        h.kraus_by_obs().to_vec(),
        KrausSet::single(root)?,
    )
}

/// `K'_{β,y} = S (K_{β,y}/√λ*) S⁻¹` and `ρ0 ∝ herm(S (Σ K_R K_R†) S)`.
pub fn ulps_to_hqmm<T: Real>(u: &Ulps<T>, opts: &ConvertOptions<T>) -> Result<(Hqmm<T>, ConversionReport<T>)> {
    let fp = transfer_fixed_point(u, &opts.eigen)?;
    let lambda = cp_eigenvalue(fp.eigenvalue)?;
    let n = u.bond_dim();
    let sim = fixed_point_similarity(&fp, n, opts.tol)?;
    let scale = lambda.sqrt().recip();
    let mut sets = Vec::with_capacity(u.cores().len());
    for k in u.cores() {
        let ops = k
            .ops()
            .iter()
            .map(|op| sim.s.matmul(op).matmul(&sim.s_inv).scale_real(scale))
            .collect();
        sets.push(KrausSet::new(ops)?);
    }
    let rho = sim
        .s
        .matmul(&u.right().output_gram())
        .matmul(&sim.s)
        .hermitian_part();
    let tr = rho.trace().re;
    if !(tr > opts.tol * rho.frobenius_norm().max(T::min_positive_value())) {
        return Err(Error::OrthogonalBoundary { overlap: tr.as_f64() });
    }
    let h = Hqmm::new(sets, vectorize(&rho.scale_real(tr.recip())))?;
    let tp = h.completeness().max_abs_diff(&Matrix::identity(n));
    let residuals = vec![("trace_preserving", tp), ("fixed_point", fp.residual)];
    Ok((
        h,
        ConversionReport {
            rescale_factor: Complex::new(lambda.sqrt(), T::zero()),
            similarity: Some(sim.s),
            fixed_point: fp,
            residuals,
        },
    ))
}

/// Singleton Kraus sets `{φ_y}` and `ρ0 = vec(ψ0 ψ0†)`.
pub fn noom_to_hqmm<T: Real>(m: &Noom<T>) -> Result<Hqmm<T>> {
    m.ensure_valid(T::validate_tol())?;
    let sets = m
        .phis()
        .iter()
        .map(|p| KrausSet::single(p.clone()))
        .collect::<Result<Vec<_>>>()?;
    Hqmm::from_density(sets, &m.psi0().outer(m.psi0()))
}

/// A uBM as a uLPS with unit purification dimension everywhere.
pub fn ubm_to_ulps<T: Real>(b: &Ubm<T>) -> Result<Ulps<T>> {
    let n = b.bond_dim();
    let left = Matrix::from_fn(1, n, |_, j| b.alpha()[j].conj());
    let right = Matrix::from_fn(n, 1, |i, _| b.omega0()[i]);
    let cores = b
        .cores()
        .iter()
        .map(|a| KrausSet::single(a.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ulps::new(KrausSet::single(left)?, cores, KrausSet::single(right)?)
}

/// Residuals of the three similarity relations `x2 = S x1`,
/// `τ2_y S = S τ1_y` and `σ2† S = σ1†` between two PSRs.
pub fn similarity_residuals<T: Real>(p1: &Psr<T>, p2: &Psr<T>, s: &Matrix<T>) -> Result<[T; 3]> {
    let d1 = p1.dim();
    let d2 = p2.dim();
    if s.shape() != (d2, d1) || p1.ops().len() != p2.ops().len() {
        return Err(Error::DimensionMismatch(format!(
            "similarity {}x{} between PSRs of dimension {d1} and {d2}",
            s.rows(),
            s.cols()
        )));
    }
    let state = s.mul_vec(p1.x0()).max_abs_diff(p2.x0());
    let ops = p1
        .ops()
        .iter()
        .zip(p2.ops())
        .map(|(a, b)| b.matmul(s).max_abs_diff(&s.matmul(a)))
        .fold(T::zero(), T::max);
    let functional = s.adjoint_mul_vec(p2.sigma()).max_abs_diff(p1.sigma());
    Ok([state, ops, functional])
}
