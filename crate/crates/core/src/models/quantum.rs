use num_complex::Complex;
use num_traits::One;

use super::{
    check_finite_matrix, check_finite_vector, shape_err, ModelKind, OperatorModel, Validate,
    ValidateOptions, ValidationReport,
};
use crate::error::Result;
use crate::linalg::{choi_reshuffle, exact_sqrt, hermitian_eigen, kron, unvectorize, vectorize, Matrix, Vector};
use crate::scalar::Real;

/// Matrix form of a lifted state of dimension `n²`.
pub(crate) fn unvec_square<T: Real>(v: &Vector<T>) -> Matrix<T> {
    let n = exact_sqrt(v.dim()).expect("lifted dimension is a perfect square");
    unvectorize(v, n, n).expect("perfect square reshape")
}

/// `max(0, −λ_min)` of the Hermitian part, or NaN when the eigensolver fails.
pub(crate) fn negativity<T: Real>(m: &Matrix<T>) -> T {
    match hermitian_eigen(&m.hermitian_part()) {
        Ok(e) => (-e.values.first().copied().unwrap_or_else(T::zero)).max(T::zero()),
        Err(_) => T::nan(),
    }
}

fn identity_residual<T: Real>(m: &Matrix<T>) -> T {
    m.max_abs_diff(&Matrix::identity(m.rows()))
}

/// A nonempty list of equally shaped Kraus operators `{K_β}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet<T: Real = f64> {
    ops: Vec<Matrix<T>>,
}

impl<T: Real> KrausSet<T> {
    pub fn new(ops: Vec<Matrix<T>>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(shape_err("kraus set must be nonempty".into()));
        };
        let shape = first.shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(shape_err("kraus operators must be nonempty matrices".into()));
        }
        for (b, k) in ops.iter().enumerate() {
            if k.shape() != shape {
                return Err(shape_err(format!(
                    "kraus operator {b} is {}x{}, expected {}x{}",
                    k.rows(),
                    k.cols(),
                    shape.0,
                    shape.1
                )));
            }
            check_finite_matrix(k, "kraus operator")?;
        }
        Ok(Self { ops })
    }

    pub fn single(op: Matrix<T>) -> Result<Self> {
        Self::new(vec![op])
    }

    pub fn ops(&self) -> &[Matrix<T>] {
        &self.ops
    }

    pub fn into_ops(self) -> Vec<Matrix<T>> {
        self.ops
    }

    /// Number of operators in the list (not necessarily the Choi rank).
    pub fn kraus_rank(&self) -> usize {
        self.ops.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.ops[0].shape()
    }

    /// `Σ_β conj(K_β) ⊗ K_β`.
    pub fn liouville(&self) -> Matrix<T> {
        let (r, c) = self.shape();
        self.ops
            .iter()
            .fold(Matrix::zeros(r * r, c * c), |acc, k| &acc + &kron(&k.conj(), k))
    }

    /// Choi matrix `Σ_β vec(K_β) vec(K_β)†` (square operators only).
    pub fn choi(&self) -> Result<Matrix<T>> {
        let (r, c) = self.shape();
        if r != c {
            return Err(shape_err(format!("choi matrix of non-square {r}x{c} kraus set")));
        }
        choi_reshuffle(&self.liouville(), r)
    }

    /// `Σ_β K_β X K_β†`.
    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let (r, _) = self.shape();
        self.ops.iter().fold(Matrix::zeros(r, r), |acc, k| {
            &acc + &k.matmul(x).matmul(&k.adjoint())
        })
    }

    /// `Σ_β K_β† S K_β`.
    pub fn apply_adjoint(&self, s: &Matrix<T>) -> Matrix<T> {
        let (_, c) = self.shape();
        self.ops.iter().fold(Matrix::zeros(c, c), |acc, k| {
            &acc + &k.adjoint().matmul(s).matmul(k)
        })
    }

    /// `Σ_β K_β† K_β`.
    pub fn completeness(&self) -> Matrix<T> {
        let (_, c) = self.shape();
        self.ops
            .iter()
            .fold(Matrix::zeros(c, c), |acc, k| &acc + &k.adjoint().matmul(k))
    }

    /// `Σ_β K_β K_β†`.
    pub fn output_gram(&self) -> Matrix<T> {
        let (r, _) = self.shape();
        self.ops
            .iter()
            .fold(Matrix::zeros(r, r), |acc, k| &acc + &k.matmul(&k.adjoint()))
    }

    fn max_imag(&self) -> T {
        self.ops.iter().map(|k| k.max_imag()).fold(T::zero(), T::max)
    }
}

fn check_square_ops<T: Real>(ops: &[Matrix<T>], n: usize, what: &str) -> Result<()> {
    if ops.is_empty() {
        return Err(shape_err(format!("{what} needs at least one observation")));
    }
    for (y, m) in ops.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(shape_err(format!(
                "{what} operator {y} is {}x{}, expected {n}x{n}",
                m.rows(),
                m.cols()
            )));
        }
        check_finite_matrix(m, what)?;
    }
    Ok(())
}

fn check_square_sets<T: Real>(sets: &[KrausSet<T>], n: usize, what: &str) -> Result<()> {
    if sets.is_empty() {
        return Err(shape_err(format!("{what} needs at least one observation")));
    }
    for (y, s) in sets.iter().enumerate() {
        if s.shape() != (n, n) {
            let (r, c) = s.shape();
            return Err(shape_err(format!(
                "{what} kraus set {y} is {r}x{c}, expected {n}x{n}"
            )));
        }
    }
    Ok(())
}

fn sandwich<T: Real>(a: &Matrix<T>, x: &Vector<T>) -> Vector<T> {
    let xm = unvec_square(x);
    vectorize(&a.matmul(&xm).matmul(&a.adjoint()))
}

fn sandwich_adjoint<T: Real>(a: &Matrix<T>, s: &Vector<T>) -> Vector<T> {
    let sm = unvec_square(s);
    vectorize(&a.adjoint().matmul(&sm).matmul(a))
}

/// Uniform Born machine: scores `|α† A^{yN} ⋯ A^{y1} ω0|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ubm<T: Real = f64> {
    alpha: Vector<T>,
    cores: Vec<Matrix<T>>,
    omega0: Vector<T>,
}

impl<T: Real> Ubm<T> {
    pub fn new(alpha: Vector<T>, cores: Vec<Matrix<T>>, omega0: Vector<T>) -> Result<Self> {
        let n = alpha.dim();
        if n == 0 || omega0.dim() != n {
            return Err(shape_err(format!(
                "boundary dimensions {} and {} must agree and be positive",
                n,
                omega0.dim()
            )));
        }
        check_square_ops(&cores, n, "ubm")?;
        check_finite_vector(&alpha, "ubm alpha")?;
        check_finite_vector(&omega0, "ubm omega0")?;
        Ok(Self {
            alpha,
            cores,
            omega0,
        })
    }

    pub fn bond_dim(&self) -> usize {
        self.alpha.dim()
    }

    pub fn alpha(&self) -> &Vector<T> {
        &self.alpha
    }

    pub fn cores(&self) -> &[Matrix<T>] {
        &self.cores
    }

    pub fn omega0(&self) -> &Vector<T> {
        &self.omega0
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Ubm
    }
}

impl<T: Real> Validate<T> for Ubm<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::default();
        if opts.strict_real {
            let imag = self
                .cores
                .iter()
                .map(|c| c.max_imag())
                .fold(self.alpha.max_imag().max(self.omega0.max_imag()), T::max);
            report.check("real_parameters", imag, opts.tol);
        }
        report
    }
}

impl<T: Real> OperatorModel<T> for Ubm<T> {
    fn obs_count(&self) -> usize {
        self.cores.len()
    }
    fn operator_dim(&self) -> usize {
        self.alpha.dim() * self.alpha.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        kron(&self.cores[y].conj(), &self.cores[y])
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        sandwich(&self.cores[y], x)
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        sandwich_adjoint(&self.cores[y], s)
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&self.alpha.outer(&self.alpha))
    }
    fn initial_state(&self) -> Vector<T> {
        vectorize(&self.omega0.outer(&self.omega0))
    }
}

/// Norm-observable operator model `({φ_y}, ψ0)` with `Σ φ_y† φ_y = 𝕀` and
/// unit-norm `ψ0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Noom<T: Real = f64> {
    phis: Vec<Matrix<T>>,
    psi0: Vector<T>,
}

impl<T: Real> Noom<T> {
    pub fn new(phis: Vec<Matrix<T>>, psi0: Vector<T>) -> Result<Self> {
        let n = psi0.dim();
        if n == 0 {
            return Err(shape_err("noom state dimension must be positive".into()));
        }
        check_square_ops(&phis, n, "noom")?;
        check_finite_vector(&psi0, "noom psi0")?;
        Ok(Self { phis, psi0 })
    }

    pub fn state_dim(&self) -> usize {
        self.psi0.dim()
    }

    pub fn phis(&self) -> &[Matrix<T>] {
        &self.phis
    }

    pub fn psi0(&self) -> &Vector<T> {
        &self.psi0
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Noom
    }

    /// `Σ φ_y† φ_y`.
    pub fn completeness(&self) -> Matrix<T> {
        let n = self.state_dim();
        self.phis
            .iter()
            .fold(Matrix::zeros(n, n), |acc, p| &acc + &p.adjoint().matmul(p))
    }
}

impl<T: Real> Validate<T> for Noom<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        r.check("completeness", identity_residual(&self.completeness()), opts.tol);
        r.check("initial_norm", (self.psi0.norm2() - T::one()).abs(), opts.tol);
        if opts.strict_real {
            let imag = self
                .phis
                .iter()
                .map(|c| c.max_imag())
                .fold(self.psi0.max_imag(), T::max);
            r.check("real_parameters", imag, opts.tol);
        }
        r
    }
}

impl<T: Real> OperatorModel<T> for Noom<T> {
    fn obs_count(&self) -> usize {
        self.phis.len()
    }
    fn operator_dim(&self) -> usize {
        self.psi0.dim() * self.psi0.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        kron(&self.phis[y].conj(), &self.phis[y])
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        sandwich(&self.phis[y], x)
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        sandwich_adjoint(&self.phis[y], s)
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&Matrix::identity(self.psi0.dim()))
    }
    fn initial_state(&self) -> Vector<T> {
        vectorize(&self.psi0.outer(&self.psi0))
    }
}

/// Hidden quantum Markov model in Kraus form: one [`KrausSet`] per
/// observation and a vectorized density matrix `ρ0` of length `n²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hqmm<T: Real = f64> {
    kraus_by_obs: Vec<KrausSet<T>>,
    rho0: Vector<T>,
}

impl<T: Real> Hqmm<T> {
    pub fn new(kraus_by_obs: Vec<KrausSet<T>>, rho0: Vector<T>) -> Result<Self> {
        let Some(n) = exact_sqrt(rho0.dim()).filter(|&n| n > 0) else {
            return Err(shape_err(format!(
                "hqmm rho0 has length {}, expected a positive perfect square",
                rho0.dim()
            )));
        };
        check_square_sets(&kraus_by_obs, n, "hqmm")?;
        check_finite_vector(&rho0, "hqmm rho0")?;
        Ok(Self { kraus_by_obs, rho0 })
    }

    /// Builds from a density matrix instead of its vectorization.
    pub fn from_density(kraus_by_obs: Vec<KrausSet<T>>, rho: &Matrix<T>) -> Result<Self> {
        Self::new(kraus_by_obs, vectorize(rho))
    }

    /// `n`, the side of the density matrix.
    pub fn state_dim(&self) -> usize {
        exact_sqrt(self.rho0.dim()).expect("checked at construction")
    }

    /// `n²`.
    pub fn state_dim_sq(&self) -> usize {
        self.rho0.dim()
    }

    pub fn kraus_by_obs(&self) -> &[KrausSet<T>] {
        &self.kraus_by_obs
    }

    pub fn rho0(&self) -> &Vector<T> {
        &self.rho0
    }

    pub fn rho0_matrix(&self) -> Matrix<T> {
        unvec_square(&self.rho0)
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Hqmm
    }

    pub fn liouville(&self, y: usize) -> Matrix<T> {
        self.kraus_by_obs[y].liouville()
    }

    pub fn choi(&self, y: usize) -> Matrix<T> {
        self.kraus_by_obs[y].choi().expect("square kraus sets")
    }

    /// `Σ_{y,β} K_{β,y}† K_{β,y}`.
    pub fn completeness(&self) -> Matrix<T> {
        let n = self.state_dim();
        self.kraus_by_obs
            .iter()
            .fold(Matrix::zeros(n, n), |acc, k| &acc + &k.completeness())
    }
}

impl<T: Real> Validate<T> for Hqmm<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        let tol = opts.tol;
        let rho = self.rho0_matrix();
        r.check("initial_hermitian", rho.hermitian_residual(), tol);
        r.check("initial_psd", negativity(&rho), tol);
        r.check("initial_trace", (rho.trace() - Complex::one()).norm(), tol);
        r.check("trace_preserving", identity_residual(&self.completeness()), tol);
        let cp = (0..self.kraus_by_obs.len())
            .map(|y| negativity(&self.choi(y)))
            .fold(T::zero(), |a, b| if b.is_nan() { b } else { a.max(b) });
        r.check("completely_positive", cp, tol);
        if opts.strict_real {
            let imag = self
                .kraus_by_obs
                .iter()
                .map(|k| k.max_imag())
                .fold(self.rho0.max_imag(), T::max);
            r.check("real_parameters", imag, tol);
        }
        r
    }
}

impl<T: Real> OperatorModel<T> for Hqmm<T> {
    fn obs_count(&self) -> usize {
        self.kraus_by_obs.len()
    }
    fn operator_dim(&self) -> usize {
        self.rho0.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        self.liouville(y)
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        vectorize(&self.kraus_by_obs[y].apply(&unvec_square(x)))
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        vectorize(&self.kraus_by_obs[y].apply_adjoint(&unvec_square(s)))
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&Matrix::identity(self.state_dim()))
    }
    fn initial_state(&self) -> Vector<T> {
        self.rho0.clone()
    }
}

/// Uniform locally purified state.
///
/// The left boundary operators are `m×n` and enter through
/// `E = Σ K_L† K_L`; core operators are `n×n`; right boundary operators are
/// `n×m'` and enter through `Σ K_R K_R†`. A length-N score is
/// `tr(E · L_{yN}(⋯ L_{y1}(Σ K_R K_R†)))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ulps<T: Real = f64> {
    left: KrausSet<T>,
    cores: Vec<KrausSet<T>>,
    right: KrausSet<T>,
}

impl<T: Real> Ulps<T> {
    pub fn new(left: KrausSet<T>, cores: Vec<KrausSet<T>>, right: KrausSet<T>) -> Result<Self> {
        let n = left.shape().1;
        if right.shape().0 != n {
            return Err(shape_err(format!(
                "left boundary acts on dimension {n} but right boundary has {} rows",
                right.shape().0
            )));
        }
        check_square_sets(&cores, n, "ulps")?;
        Ok(Self { left, cores, right })
    }

    pub fn bond_dim(&self) -> usize {
        self.left.shape().1
    }

    pub fn left(&self) -> &KrausSet<T> {
        &self.left
    }

    pub fn cores(&self) -> &[KrausSet<T>] {
        &self.cores
    }

    pub fn right(&self) -> &KrausSet<T> {
        &self.right
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Ulps
    }
}

impl<T: Real> Validate<T> for Ulps<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::default();
        if opts.strict_real {
            let imag = self
                .cores
                .iter()
                .map(|k| k.max_imag())
                .fold(self.left.max_imag().max(self.right.max_imag()), T::max);
            report.check("real_parameters", imag, opts.tol);
        }
        report
    }
}

impl<T: Real> OperatorModel<T> for Ulps<T> {
    fn obs_count(&self) -> usize {
        self.cores.len()
    }
    fn operator_dim(&self) -> usize {
        let n = self.bond_dim();
        n * n
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        self.cores[y].liouville()
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        vectorize(&self.cores[y].apply(&unvec_square(x)))
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        vectorize(&self.cores[y].apply_adjoint(&unvec_square(s)))
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&self.left.completeness())
    }
    fn initial_state(&self) -> Vector<T> {
        vectorize(&self.right.output_gram())
    }
}
