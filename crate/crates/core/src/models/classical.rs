use num_complex::Complex;
use num_traits::One;

use super::{
    check_finite_matrix, check_finite_vector, shape_err, ModelKind, OperatorModel, Validate,
    ValidateOptions, ValidationReport,
};
use crate::error::Result;
use crate::linalg::{sum_matrices, Matrix, Vector};
use crate::scalar::Real;

fn check_cores<T: Real>(cores: &[Matrix<T>], dim: usize, what: &str) -> Result<()> {
    if cores.is_empty() {
        return Err(shape_err(format!("{what} needs at least one observation")));
    }
    for (y, c) in cores.iter().enumerate() {
        if c.shape() != (dim, dim) {
            return Err(shape_err(format!(
                "{what} core {y} is {}x{}, expected {dim}x{dim}",
                c.rows(),
                c.cols()
            )));
        }
        check_finite_matrix(c, what)?;
    }
    Ok(())
}

/// Uniform matrix product state: left boundary σ, one core per observation,
/// right boundary ρ0. Scores are `σ† A^{yN} ⋯ A^{y1} ρ0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Umps<T: Real = f64> {
    sigma: Vector<T>,
    cores: Vec<Matrix<T>>,
    rho0: Vector<T>,
}

impl<T: Real> Umps<T> {
    pub fn new(sigma: Vector<T>, cores: Vec<Matrix<T>>, rho0: Vector<T>) -> Result<Self> {
        let d = sigma.dim();
        if d == 0 || rho0.dim() != d {
            return Err(shape_err(format!(
                "boundary dimensions {} and {} must agree and be positive",
                d,
                rho0.dim()
            )));
        }
        check_cores(&cores, d, "umps")?;
        check_finite_vector(&sigma, "umps sigma")?;
        check_finite_vector(&rho0, "umps rho0")?;
        Ok(Self { sigma, cores, rho0 })
    }

    pub fn bond_dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &Vector<T> {
        &self.sigma
    }

    pub fn cores(&self) -> &[Matrix<T>] {
        &self.cores
    }

    pub fn rho0(&self) -> &Vector<T> {
        &self.rho0
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Umps
    }

    /// Reinterprets the same parameters as a PSR (no normalization applied).
    pub fn as_psr(&self) -> Psr<T> {
        Psr {
            sigma: self.sigma.clone(),
            ops: self.cores.clone(),
            x0: self.rho0.clone(),
        }
    }
}

impl<T: Real> Validate<T> for Umps<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::default();
        if opts.strict_real {
            let imag = self
                .cores
                .iter()
                .map(|c| c.max_imag())
                .fold(self.sigma.max_imag().max(self.rho0.max_imag()), T::max);
            report.check("real_parameters", imag, opts.tol);
        }
        report
    }
}

impl<T: Real> OperatorModel<T> for Umps<T> {
    fn obs_count(&self) -> usize {
        self.cores.len()
    }
    fn operator_dim(&self) -> usize {
        self.sigma.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        self.cores[y].clone()
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        self.cores[y].mul_vec(x)
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        self.cores[y].adjoint_mul_vec(s)
    }
    fn functional(&self) -> Vector<T> {
        self.sigma.clone()
    }
    fn initial_state(&self) -> Vector<T> {
        self.rho0.clone()
    }
}

/// Uncontrolled predictive state representation `(σ, {τ_y}, x0)` with
/// `σ† x0 = 1` and `σ† Σ_y τ_y = σ†`.
#[derive(Clone, Debug, PartialEq)]
pub struct Psr<T: Real = f64> {
    sigma: Vector<T>,
    ops: Vec<Matrix<T>>,
    x0: Vector<T>,
}

impl<T: Real> Psr<T> {
    pub fn new(sigma: Vector<T>, ops: Vec<Matrix<T>>, x0: Vector<T>) -> Result<Self> {
        let d = sigma.dim();
        if d == 0 || x0.dim() != d {
            return Err(shape_err(format!(
                "functional and state dimensions {} and {} must agree and be positive",
                d,
                x0.dim()
            )));
        }
        check_cores(&ops, d, "psr")?;
        check_finite_vector(&sigma, "psr sigma")?;
        check_finite_vector(&x0, "psr x0")?;
        Ok(Self { sigma, ops, x0 })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &Vector<T> {
        &self.sigma
    }

    pub fn ops(&self) -> &[Matrix<T>] {
        &self.ops
    }

    pub fn x0(&self) -> &Vector<T> {
        &self.x0
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Psr
    }

    pub fn as_umps(&self) -> Umps<T> {
        Umps {
            sigma: self.sigma.clone(),
            cores: self.ops.clone(),
            rho0: self.x0.clone(),
        }
    }

    /// `|σ† x0 − 1|`.
    pub fn initial_normalization_residual(&self) -> T {
        (self.sigma.dot(&self.x0) - Complex::one()).norm()
    }

    /// `max |σ† Σ τ_y − σ†|`.
    pub fn marginal_normalization_residual(&self) -> T {
        let tau = sum_matrices(&self.ops).expect("nonempty operators");
        tau.adjoint_mul_vec(&self.sigma).max_abs_diff(&self.sigma)
    }
}

impl<T: Real> Validate<T> for Psr<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::default();
        report.check("initial_normalization", self.initial_normalization_residual(), opts.tol);
        report.check(
            "marginal_normalization",
            self.marginal_normalization_residual(),
            opts.tol,
        );
        if opts.strict_real {
            let imag = self
                .ops
                .iter()
                .map(|c| c.max_imag())
                .fold(self.sigma.max_imag().max(self.x0.max_imag()), T::max);
            report.check("real_parameters", imag, opts.tol);
        }
        report
    }
}

impl<T: Real> OperatorModel<T> for Psr<T> {
    fn obs_count(&self) -> usize {
        self.ops.len()
    }
    fn operator_dim(&self) -> usize {
        self.sigma.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        self.ops[y].clone()
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        self.ops[y].mul_vec(x)
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        self.ops[y].adjoint_mul_vec(s)
    }
    fn functional(&self) -> Vector<T> {
        self.sigma.clone()
    }
    fn initial_state(&self) -> Vector<T> {
        self.x0.clone()
    }
}

/// Hidden Markov model `(A, C, x0)` with column-stochastic transition `A`
/// (n×n) and emission `C` (|O|×n).
///
/// Parameters are stored as complex matrices; validation requires the
/// imaginary parts to vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct Hmm<T: Real = f64> {
    transition: Matrix<T>,
    emission: Matrix<T>,
    x0: Vector<T>,
}

impl<T: Real> Hmm<T> {
    pub fn new(transition: Matrix<T>, emission: Matrix<T>, x0: Vector<T>) -> Result<Self> {
        let n = x0.dim();
        if n == 0 {
            return Err(shape_err("hmm needs at least one hidden state".into()));
        }
        if transition.shape() != (n, n) {
            return Err(shape_err(format!(
                "transition is {}x{}, expected {n}x{n}",
                transition.rows(),
                transition.cols()
            )));
        }
        if emission.cols() != n || emission.rows() == 0 {
            return Err(shape_err(format!(
                "emission is {}x{}, expected |O|x{n} with |O| >= 1",
                emission.rows(),
                emission.cols()
            )));
        }
        check_finite_matrix(&transition, "hmm transition")?;
        check_finite_matrix(&emission, "hmm emission")?;
        check_finite_vector(&x0, "hmm x0")?;
        Ok(Self {
            transition,
            emission,
            x0,
        })
    }

    /// Real-valued constructor from nested rows, for literals.
    pub fn from_real(transition: &[&[f64]], emission: &[&[f64]], x0: &[f64]) -> Result<Self> {
        Self::new(
            Matrix::from_real_rows(transition),
            Matrix::from_real_rows(emission),
            Vector::from_real(x0),
        )
    }

    pub fn state_dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn transition(&self) -> &Matrix<T> {
        &self.transition
    }

    pub fn emission(&self) -> &Matrix<T> {
        &self.emission
    }

    pub fn x0(&self) -> &Vector<T> {
        &self.x0
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::Hmm
    }

    /// Observable operator `T_y = diag(C_{y,:}) A`.
    pub fn observable_operator(&self, y: usize) -> Matrix<T> {
        let a = &self.transition;
        Matrix::from_fn(a.rows(), a.cols(), |i, j| self.emission[(y, i)] * a[(i, j)])
    }
}

fn column_sum_residual<T: Real>(m: &Matrix<T>) -> T {
    (0..m.cols())
        .map(|j| ((0..m.rows()).map(|i| m[(i, j)]).sum::<Complex<T>>() - Complex::one()).norm())
        .fold(T::zero(), T::max)
}

fn min_real<T: Real>(xs: &[Complex<T>]) -> T {
    xs.iter().fold(T::infinity(), |m, z| m.min(z.re))
}

impl<T: Real> Validate<T> for Hmm<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        let tol = opts.tol;
        let imag = self
            .transition
            .max_imag()
            .max(self.emission.max_imag())
            .max(self.x0.max_imag());
        r.check("real_parameters", imag, tol);
        let neg = |xs: &[Complex<T>]| (-min_real(xs)).max(T::zero());
        r.check("nonnegative_transition", neg(self.transition.as_slice()), tol);
        r.check("nonnegative_emission", neg(self.emission.as_slice()), tol);
        r.check("nonnegative_initial", neg(self.x0.as_slice()), tol);
        r.check("stochastic_transition", column_sum_residual(&self.transition), tol);
        r.check("stochastic_emission", column_sum_residual(&self.emission), tol);
        r.check(
            "initial_normalization",
            (self.x0.sum() - Complex::one()).norm(),
            tol,
        );
        r
    }
}

impl<T: Real> OperatorModel<T> for Hmm<T> {
    fn obs_count(&self) -> usize {
        self.emission.rows()
    }
    fn operator_dim(&self) -> usize {
        self.x0.dim()
    }
    fn observable(&self, y: usize) -> Matrix<T> {
        self.observable_operator(y)
    }
    fn apply_observable(&self, y: usize, x: &Vector<T>) -> Vector<T> {
        let ax = self.transition.mul_vec(x);
        Vector::from_fn(ax.dim(), |i| self.emission[(y, i)] * ax[i])
    }
    fn apply_observable_adjoint(&self, y: usize, s: &Vector<T>) -> Vector<T> {
        let cs = Vector::from_fn(s.dim(), |i| self.emission[(y, i)].conj() * s[i]);
        self.transition.adjoint_mul_vec(&cs)
    }
    fn functional(&self) -> Vector<T> {
        Vector::ones(self.x0.dim())
    }
    fn initial_state(&self) -> Vector<T> {
        self.x0.clone()
    }
}

/// Non-uniform matrix product state with open boundaries.
///
/// `sites[i][y]` is the slice `A^{[i],y}` of shape `D_{i+1} × D_i`, with
/// `D_0 = D_N = 1`, so the first site holds column vectors and the last holds
/// row vectors. All sites share one alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsChain<T: Real = f64> {
    sites: Vec<Vec<Matrix<T>>>,
}

impl<T: Real> MpsChain<T> {
    pub fn new(sites: Vec<Vec<Matrix<T>>>) -> Result<Self> {
        let Some(first) = sites.first() else {
            return Err(shape_err("mps chain needs at least one site".into()));
        };
        let obs = first.len();
        if obs == 0 {
            return Err(shape_err("mps chain site 0 has no observations".into()));
        }
        let mut left = 1usize;
        for (i, site) in sites.iter().enumerate() {
            if site.len() != obs {
                return Err(shape_err(format!(
                    "site {i} has {} observations, expected {obs}",
                    site.len()
                )));
            }
            let rows = site[0].rows();
            for (y, m) in site.iter().enumerate() {
                if m.cols() != left || m.rows() != rows {
                    return Err(shape_err(format!(
                        "site {i} slice {y} is {}x{}, expected {rows}x{left}",
                        m.rows(),
                        m.cols()
                    )));
                }
                check_finite_matrix(m, "mps chain")?;
            }
            left = rows;
        }
        if left != 1 {
            return Err(shape_err(format!("last site has {left} rows, expected 1")));
        }
        Ok(Self { sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn obs_count(&self) -> usize {
        self.sites[0].len()
    }

    pub fn sites(&self) -> &[Vec<Matrix<T>>] {
        &self.sites
    }

    /// Bond dimensions `D_0, …, D_N`.
    pub fn bond_dims(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.sites.iter().map(|s| s[0].rows()))
            .collect()
    }

    /// Bond dimension `max_k D_k`.
    pub fn bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::MpsChain
    }

    /// The uniform chain of length `n` built from a uMPS (boundaries folded
    /// into the first and last sites).
    pub fn from_umps(u: &Umps<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(shape_err("chain length must be positive".into()));
        }
        let d = u.bond_dim();
        let obs = u.cores.len();
        let rho = Matrix::from_fn(d, 1, |i, _| u.rho0[i]);
        let sigma_row = Matrix::from_fn(1, d, |_, j| u.sigma[j].conj());
        let mut sites = Vec::with_capacity(n);
        for i in 0..n {
            let site = (0..obs)
                .map(|y| {
                    let mut m = u.cores[y].clone();
                    if i == 0 {
                        m = m.matmul(&rho);
                    }
                    if i == n - 1 {
                        m = sigma_row.matmul(&m);
                    }
                    m
                })
                .collect();
            sites.push(site);
        }
        Self::new(sites)
    }
}

impl<T: Real> Validate<T> for MpsChain<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::default();
        if opts.strict_real {
            let imag = self
                .sites
                .iter()
                .flatten()
                .map(|m| m.max_imag())
                .fold(T::zero(), T::max);
            report.check("real_parameters", imag, opts.tol);
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn deterministic_hmm_is_valid() {
        let h = Hmm::<f64>::from_real(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 1.0]], &[1.0, 0.0]).unwrap();
        assert!(h.validate(1e-9).is_valid());
        assert_eq!(h.transfer_operator(), Matrix::identity(2));
        assert_eq!(h.observable_operator(0), Matrix::identity(2));
    }

    #[test]
    fn hmm_violations_are_reported() {
        let h = Hmm::<f64>::from_real(&[&[0.5, 0.0], &[0.4, 1.0]], &[&[1.2, 1.0], &[-0.2, 0.0]], &[0.7, 0.7])
            .unwrap();
        let r = h.validate(1e-9);
        assert!((r.get("stochastic_transition").unwrap().residual - 0.1).abs() < 1e-12);
        assert!((r.get("nonnegative_emission").unwrap().residual - 0.2).abs() < 1e-12);
        assert!((r.get("initial_normalization").unwrap().residual - 0.4).abs() < 1e-12);
        assert!(r.get("stochastic_emission").is_none());
        let complex = Hmm::<f64>::new(
            Matrix::identity(1),
            Matrix::from_fn(1, 1, |_, _| Complex::new(1.0, 0.5)),
            Vector::from_real(&[1.0]),
        )
        .unwrap();
        assert!(complex.validate(1e-9).get("real_parameters").is_some());
    }

    #[test]
    fn hmm_shape_errors() {
        assert!(Hmm::<f64>::from_real(&[&[1.0]], &[&[1.0, 0.0]], &[1.0]).is_err());
        assert!(Hmm::<f64>::from_real(&[&[1.0, 0.0]], &[&[1.0]], &[1.0]).is_err());
        assert!(Hmm::<f64>::from_real(&[], &[], &[]).is_err());
    }

    #[test]
    fn psr_residuals() {
        let p = Psr::<f64>::new(
            Vector::ones(2),
            vec![Matrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.5]])],
            Vector::from_real(&[0.5, 0.5]),
        )
        .unwrap();
        let r = p.validate(1e-9);
        assert!(r.get("initial_normalization").is_none());
        assert!((r.get("marginal_normalization").unwrap().residual - 0.5).abs() < 1e-15);
        assert!(Psr::<f64>::new(Vector::ones(2), vec![], Vector::ones(2)).is_err());
        assert!(Psr::<f64>::new(Vector::ones(2), vec![Matrix::identity(3)], Vector::ones(2)).is_err());
    }

    #[test]
    fn chain_shapes() {
        let u = Umps::<f64>::new(
            Vector::from_real(&[1.0, 2.0]),
            vec![Matrix::identity(2), Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])],
            Vector::from_real(&[1.0, 0.0]),
        )
        .unwrap();
        let chain = MpsChain::from_umps(&u, 3).unwrap();
        assert_eq!(chain.bond_dims(), vec![1, 2, 2, 1]);
        assert_eq!(chain.bond_dim(), 2);
        assert!(MpsChain::<f64>::new(vec![vec![Matrix::zeros(2, 1)]]).is_err());
        let single = MpsChain::<f64>::new(vec![vec![Matrix::diag(&[c(0.3)]), Matrix::diag(&[c(0.7)])]]).unwrap();
        assert_eq!(single.len(), 1);
    }
}
