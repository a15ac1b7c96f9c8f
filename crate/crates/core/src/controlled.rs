//! Action-conditioned models: POMDPs, IO-HQMMs and QOMDPs.
//!
//! An interleaved sequence `a1 y1 … aT yT` is a slice of `(action,
//! observation)` pairs; operators apply right to left, so the first pair acts
//! on the initial state first. Rewards are not modeled.

use num_complex::Complex;
use num_traits::One;

use crate::convert::hmm_to_psr;
use crate::error::{Error, Result};
use crate::evaluate::{FilterState, ZERO_PROBABILITY};
use crate::linalg::{kron, vectorize, Matrix, Vector};
use crate::models::{
    negativity, unvec_square, Hmm, KrausSet, ModelKind, Psr, Validate, ValidateOptions,
    ValidationReport,
};
use crate::scalar::Real;

fn shape_err(msg: String) -> Error {
    Error::DimensionMismatch(msg)
}

/// Shared interface of the controlled models in their linear form
/// `score = σ† τ^{aT}_{yT} ⋯ τ^{a1}_{y1} x0`.
pub trait ControlledModel<T: Real> {
    fn kind(&self) -> ModelKind;
    fn action_count(&self) -> usize;
    fn obs_count(&self) -> usize;
    /// Dimension of the (vectorized) state.
    fn state_dim(&self) -> usize;
    fn functional(&self) -> Vector<T>;
    fn initial_state(&self) -> Vector<T>;
    /// `τ^a_y x`.
    fn apply(&self, action: usize, y: usize, x: &Vector<T>) -> Vector<T>;

    fn check_pairs(&self, seq: &[(usize, usize)]) -> Result<()> {
        for &(a, y) in seq {
            if a >= self.action_count() {
                return Err(Error::ActionOutOfRange {
                    action: a,
                    action_count: self.action_count(),
                });
            }
            if y >= self.obs_count() {
                return Err(Error::SymbolOutOfRange {
                    symbol: y,
                    obs_count: self.obs_count(),
                });
            }
        }
        Ok(())
    }

    /// Probability of the observations given the open-loop actions.
    fn controlled_joint(&self, seq: &[(usize, usize)]) -> Result<T> {
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_pairs(seq)?;
        let x = seq
            .iter()
            .fold(self.initial_state(), |x, &(a, y)| self.apply(a, y, &x));
        Ok(self.functional().dot(&x).re)
    }

    fn controlled_filter_init(&self) -> FilterState<T> {
        FilterState {
            kind: self.kind(),
            state: self.initial_state(),
            log_prob: T::zero(),
            sign: T::one(),
            steps: 0,
        }
    }

    /// Normalized state after taking `action` and observing `y`.
    fn controlled_filter(&self, st: &FilterState<T>, action: usize, y: usize) -> Result<FilterState<T>> {
        if st.kind != self.kind() || st.state.dim() != self.state_dim() {
            return Err(Error::StateMismatch(format!(
                "{} state of dimension {} given to a {} of dimension {}",
                st.kind,
                st.state.dim(),
                self.kind(),
                self.state_dim()
            )));
        }
        self.check_pairs(&[(action, y)])?;
        let x = self.apply(action, y, &st.state);
        let p = self.functional().dot(&x);
        if !(p.norm() > T::lit(ZERO_PROBABILITY)) {
            return Err(Error::ZeroProbabilityPrefix { position: st.steps });
        }
        Ok(FilterState {
            kind: st.kind,
            state: x.scale(p.inv()),
            log_prob: st.log_prob + p.re.abs().ln(),
            sign: if p.re < T::zero() { -st.sign } else { st.sign },
            steps: st.steps + 1,
        })
    }

    /// `P(y | state, action)` for every `y`.
    fn controlled_predict(&self, st: &FilterState<T>, action: usize) -> Result<Vec<T>> {
        self.check_pairs(&[(action, 0)])?;
        let sigma = self.functional();
        Ok((0..self.obs_count())
            .map(|y| sigma.dot(&self.apply(action, y, &st.state)).re)
            .collect())
    }

    /// States along an interleaved sequence, starting with the initial one.
    fn controlled_filter_sequence(&self, seq: &[(usize, usize)]) -> Result<Vec<FilterState<T>>> {
        let mut out = vec![self.controlled_filter_init()];
        for &(a, y) in seq {
            let next = self.controlled_filter(out.last().expect("nonempty"), a, y)?;
            out.push(next);
        }
        Ok(out)
    }
}

fn check_action_banks(banks: usize, what: &str) -> Result<()> {
    if banks == 0 {
        return Err(shape_err(format!("{what} needs at least one action")));
    }
    Ok(())
}

/// POMDP `({A^a}, {C^a}, x0)`: one column-stochastic transition and
/// emission matrix per action.
#[derive(Clone, Debug, PartialEq)]
pub struct Pomdp<T: Real = f64> {
    transitions: Vec<Matrix<T>>,
    emissions: Vec<Matrix<T>>,
    x0: Vector<T>,
}

impl<T: Real> Pomdp<T> {
    pub fn new(transitions: Vec<Matrix<T>>, emissions: Vec<Matrix<T>>, x0: Vector<T>) -> Result<Self> {
        check_action_banks(transitions.len(), "pomdp")?;
        if emissions.len() != transitions.len() {
            return Err(shape_err(format!(
                "{} transition matrices but {} emission matrices",
                transitions.len(),
                emissions.len()
            )));
        }
        let obs = emissions[0].rows();
        for (a, (t, e)) in transitions.iter().zip(&emissions).enumerate() {
            if e.rows() != obs {
                return Err(shape_err(format!(
                    "action {a} emits {} observations, expected {obs}",
                    e.rows()
                )));
            }
            // Reuses the HMM shape checks.
            Hmm::new(t.clone(), e.clone(), x0.clone())?;
        }
        Ok(Self {
            transitions,
            emissions,
            x0,
        })
    }

    pub fn transitions(&self) -> &[Matrix<T>] {
        &self.transitions
    }

    pub fn emissions(&self) -> &[Matrix<T>] {
        &self.emissions
    }

    pub fn x0(&self) -> &Vector<T> {
        &self.x0
    }

    /// The HMM obtained by always taking `action`.
    pub fn action_hmm(&self, action: usize) -> Result<Hmm<T>> {
        self.check_pairs(&[(action, 0)])?;
        Hmm::new(
            self.transitions[action].clone(),
            self.emissions[action].clone(),
            self.x0.clone(),
        )
    }
}

impl<T: Real> Validate<T> for Pomdp<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        for a in 0..self.transitions.len() {
            let h = self.action_hmm(a).expect("shapes checked at construction");
            r.merge(h.validate_with(opts));
        }
        // One entry per constraint: keep the worst residual.
        let mut worst: Vec<crate::models::Violation<T>> = Vec::new();
        for v in r.violations {
            match worst.iter_mut().find(|w| w.constraint == v.constraint) {
                Some(w) => {
                    if v.residual > w.residual || v.residual.is_nan() {
                        w.residual = v.residual;
                    }
                }
                None => worst.push(v),
            }
        }
        ValidationReport { violations: worst }
    }
}

impl<T: Real> ControlledModel<T> for Pomdp<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Pomdp
    }
    fn action_count(&self) -> usize {
        self.transitions.len()
    }
    fn obs_count(&self) -> usize {
        self.emissions[0].rows()
    }
    fn state_dim(&self) -> usize {
        self.x0.dim()
    }
    fn functional(&self) -> Vector<T> {
        Vector::ones(self.x0.dim())
    }
    fn initial_state(&self) -> Vector<T> {
        self.x0.clone()
    }
    fn apply(&self, action: usize, y: usize, x: &Vector<T>) -> Vector<T> {
        let ax = self.transitions[action].mul_vec(x);
        let c = &self.emissions[action];
        Vector::from_fn(ax.dim(), |i| c[(y, i)] * ax[i])
    }
}

fn density_report<T: Real>(r: &mut ValidationReport<T>, rho: &Matrix<T>, tol: T) {
    r.check("initial_hermitian", rho.hermitian_residual(), tol);
    r.check("initial_psd", negativity(rho), tol);
    r.check("initial_trace", (rho.trace() - Complex::one()).norm(), tol);
}

fn square_density<T: Real>(rho0: &Vector<T>, n: usize, what: &str) -> Result<()> {
    if rho0.dim() != n * n {
        return Err(shape_err(format!(
            "{what} rho0 has length {}, expected {}",
            rho0.dim(),
            n * n
        )));
    }
    if !rho0.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite entry in {what} rho0")));
    }
    Ok(())
}

/// IO-HQMM: a Kraus set per (action, observation) and a density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct IoHqmm<T: Real = f64> {
    kraus: Vec<Vec<KrausSet<T>>>,
    rho0: Vector<T>,
}

impl<T: Real> IoHqmm<T> {
    /// `kraus[a][y]` is the Kraus set for action `a`, observation `y`.
    pub fn new(kraus: Vec<Vec<KrausSet<T>>>, rho0: Vector<T>) -> Result<Self> {
        check_action_banks(kraus.len(), "io-hqmm")?;
        let obs = kraus[0].len();
        if obs == 0 {
            return Err(shape_err("io-hqmm needs at least one observation".into()));
        }
        let n = kraus[0][0].shape().1;
        for (a, bank) in kraus.iter().enumerate() {
            if bank.len() != obs {
                return Err(shape_err(format!(
                    "action {a} has {} observations, expected {obs}",
                    bank.len()
                )));
            }
            for (y, k) in bank.iter().enumerate() {
                if k.shape() != (n, n) {
                    let (r, c) = k.shape();
                    return Err(shape_err(format!(
                        "kraus set ({a}, {y}) is {r}x{c}, expected {n}x{n}"
                    )));
                }
            }
        }
        square_density(&rho0, n, "io-hqmm")?;
        Ok(Self { kraus, rho0 })
    }

    pub fn kraus(&self) -> &[Vec<KrausSet<T>>] {
        &self.kraus
    }

    pub fn rho0(&self) -> &Vector<T> {
        &self.rho0
    }

    /// `n`, the side of the density matrix.
    pub fn dim(&self) -> usize {
        self.kraus[0][0].shape().1
    }

    /// Liouville matrix `L^a_y`.
    pub fn liouville(&self, action: usize, y: usize) -> Matrix<T> {
        self.kraus[action][y].liouville()
    }

    /// `Σ_{y,β} K^a†K^a` for one action.
    pub fn completeness(&self, action: usize) -> Matrix<T> {
        let n = self.dim();
        self.kraus[action]
            .iter()
            .fold(Matrix::zeros(n, n), |acc, k| &acc + &k.completeness())
    }
}

impl<T: Real> Validate<T> for IoHqmm<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        let n = self.dim();
        density_report(&mut r, &unvec_square(&self.rho0), opts.tol);
        let tp = (0..self.kraus.len())
            .map(|a| self.completeness(a).max_abs_diff(&Matrix::identity(n)))
            .fold(T::zero(), T::max);
        r.check("trace_preserving", tp, opts.tol);
        let cp = self
            .kraus
            .iter()
            .flatten()
            .map(|k| negativity(&k.choi().expect("square")))
            .fold(T::zero(), |a, b| if b.is_nan() { b } else { a.max(b) });
        r.check("completely_positive", cp, opts.tol);
        r
    }
}

impl<T: Real> ControlledModel<T> for IoHqmm<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::IoHqmm
    }
    fn action_count(&self) -> usize {
        self.kraus.len()
    }
    fn obs_count(&self) -> usize {
        self.kraus[0].len()
    }
    fn state_dim(&self) -> usize {
        self.rho0.dim()
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&Matrix::identity(self.dim()))
    }
    fn initial_state(&self) -> Vector<T> {
        self.rho0.clone()
    }
    fn apply(&self, action: usize, y: usize, x: &Vector<T>) -> Vector<T> {
        vectorize(&self.kraus[action][y].apply(&unvec_square(x)))
    }
}

/// QOMDP: a single Kraus operator per (action, observation).
#[derive(Clone, Debug, PartialEq)]
pub struct Qomdp<T: Real = f64> {
    ops: Vec<Vec<Matrix<T>>>,
    rho0: Vector<T>,
}

impl<T: Real> Qomdp<T> {
    /// `ops[a][y]` is `K^a_y`.
    pub fn new(ops: Vec<Vec<Matrix<T>>>, rho0: Vector<T>) -> Result<Self> {
        check_action_banks(ops.len(), "qomdp")?;
        let obs = ops[0].len();
        if obs == 0 {
            return Err(shape_err("qomdp needs at least one observation".into()));
        }
        let n = ops[0][0].cols();
        if n == 0 {
            return Err(shape_err("qomdp operators must be nonempty".into()));
        }
        for (a, bank) in ops.iter().enumerate() {
            if bank.len() != obs {
                return Err(shape_err(format!(
                    "action {a} has {} observations, expected {obs}",
                    bank.len()
                )));
            }
            for (y, k) in bank.iter().enumerate() {
                if k.shape() != (n, n) {
                    return Err(shape_err(format!(
                        "operator ({a}, {y}) is {}x{}, expected {n}x{n}",
                        k.rows(),
                        k.cols()
                    )));
                }
                if !k.is_finite() {
                    return Err(Error::InvalidParameter("non-finite entry in qomdp operator".into()));
                }
            }
        }
        square_density(&rho0, n, "qomdp")?;
        Ok(Self { ops, rho0 })
    }

    pub fn from_density(ops: Vec<Vec<Matrix<T>>>, rho: &Matrix<T>) -> Result<Self> {
        Self::new(ops, vectorize(rho))
    }

    pub fn ops(&self) -> &[Vec<Matrix<T>>] {
        &self.ops
    }

    pub fn rho0(&self) -> &Vector<T> {
        &self.rho0
    }

    pub fn rho0_matrix(&self) -> Matrix<T> {
        unvec_square(&self.rho0)
    }

    pub fn dim(&self) -> usize {
        self.ops[0][0].cols()
    }

    /// `Tr(K_{yT}^{aT} ⋯ K_{y1}^{a1} ρ0 K_{y1}^{a1†} ⋯ K_{yT}^{aT†})`.
    pub fn joint_density(&self, seq: &[(usize, usize)]) -> Result<T> {
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_pairs(seq)?;
        let rho = seq.iter().fold(self.rho0_matrix(), |rho, &(a, y)| {
            let k = &self.ops[a][y];
            k.matmul(&rho).matmul(&k.adjoint())
        });
        Ok(rho.trace().re)
    }

    /// `vec(𝕀)ᵀ L^{aT}_{yT} ⋯ L^{a1}_{y1} vec(ρ0)` with every
    /// `L = conj(K) ⊗ K` materialized.
    pub fn joint_vectorized(&self, seq: &[(usize, usize)]) -> Result<T> {
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_pairs(seq)?;
        let x = seq.iter().fold(self.rho0.clone(), |x, &(a, y)| {
            let k = &self.ops[a][y];
            kron(&k.conj(), k).mul_vec(&x)
        });
        Ok(self.functional().dot(&x).re)
    }
}

impl<T: Real> Validate<T> for Qomdp<T> {
    fn validate_with(&self, opts: &ValidateOptions<T>) -> ValidationReport<T> {
        let mut r = ValidationReport::default();
        let n = self.dim();
        density_report(&mut r, &self.rho0_matrix(), opts.tol);
        let tp = self
            .ops
            .iter()
            .map(|bank| {
                bank.iter()
                    .fold(Matrix::zeros(n, n), |acc, k| &acc + &k.adjoint().matmul(k))
                    .max_abs_diff(&Matrix::identity(n))
            })
            .fold(T::zero(), T::max);
        r.check("trace_preserving", tp, opts.tol);
        r
    }
}

impl<T: Real> ControlledModel<T> for Qomdp<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Qomdp
    }
    fn action_count(&self) -> usize {
        self.ops.len()
    }
    fn obs_count(&self) -> usize {
        self.ops[0].len()
    }
    fn state_dim(&self) -> usize {
        self.rho0.dim()
    }
    fn functional(&self) -> Vector<T> {
        vectorize(&Matrix::identity(self.dim()))
    }
    fn initial_state(&self) -> Vector<T> {
        self.rho0.clone()
    }
    fn apply(&self, action: usize, y: usize, x: &Vector<T>) -> Vector<T> {
        let k = &self.ops[action][y];
        vectorize(&k.matmul(&unvec_square(x)).matmul(&k.adjoint()))
    }
}

/// Singleton Kraus sets `{K^a_y}`; the density matrix is kept.
pub fn qomdp_to_iohqmm<T: Real>(q: &Qomdp<T>) -> Result<IoHqmm<T>> {
    q.ensure_valid(T::validate_tol())?;
    let kraus = q
        .ops
        .iter()
        .map(|bank| bank.iter().map(|k| KrausSet::single(k.clone())).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    IoHqmm::new(kraus, q.rho0.clone())
}

/// Observable-operator banks induced by a fixed open-loop action list:
/// bank `t` holds `T^{a_t}_y = diag(C^{a_t}_{y,:}) A^{a_t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOperators<T: Real = f64> {
    pub actions: Vec<usize>,
    pub banks: Vec<Vec<Matrix<T>>>,
    pub sigma: Vector<T>,
    pub x0: Vector<T>,
}

impl<T: Real> PolicyOperators<T> {
    /// Joint of an observation sequence no longer than the action list.
    pub fn joint(&self, obs: &[usize]) -> Result<T> {
        if obs.is_empty() {
            return Err(Error::EmptySequence);
        }
        if obs.len() > self.banks.len() {
            return Err(Error::InvalidParameter(format!(
                "{} observations but only {} actions",
                obs.len(),
                self.banks.len()
            )));
        }
        let count = self.banks[0].len();
        let mut x = self.x0.clone();
        for (bank, &y) in self.banks.iter().zip(obs) {
            if y >= count {
                return Err(Error::SymbolOutOfRange {
                    symbol: y,
                    obs_count: count,
                });
            }
            x = bank[y].mul_vec(&x);
        }
        Ok(self.sigma.dot(&x).re)
    }

    /// The stationary PSR when every action is the same.
    pub fn as_stationary(&self) -> Option<Psr<T>> {
        let first = self.actions[0];
        if self.actions.iter().all(|&a| a == first) {
            Psr::new(self.sigma.clone(), self.banks[0].clone(), self.x0.clone()).ok()
        } else {
            None
        }
    }
}

pub fn pomdp_to_psr_per_policy<T: Real>(p: &Pomdp<T>, actions: &[usize]) -> Result<PolicyOperators<T>> {
    if actions.is_empty() {
        return Err(Error::InvalidParameter("action list must be nonempty".into()));
    }
    p.ensure_valid(T::validate_tol())?;
    let mut banks = Vec::with_capacity(actions.len());
    for &a in actions {
        let psr = hmm_to_psr(&p.action_hmm(a)?)?;
        banks.push(psr.ops().to_vec());
    }
    Ok(PolicyOperators {
        actions: actions.to_vec(),
        banks,
        sigma: Vector::ones(p.x0.dim()),
        x0: p.x0.clone(),
    })
}

/// Parses `"a:y a:y …"`.
pub fn parse_action_sequence(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split_whitespace()
        .map(|tok| {
            let (a, y) = tok
                .split_once(':')
                .ok_or_else(|| Error::InvalidParameter(format!("expected a:y, got {tok:?}")))?;
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad index in {tok:?}")))
            };
            Ok((parse(a)?, parse(y)?))
        })
        .collect()
}
