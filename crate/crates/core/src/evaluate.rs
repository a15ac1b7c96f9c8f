//! Joint scores, recursive filtering and non-terminating conditionals.

use num_complex::Complex;
use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::{
    canonicalize_phase, dominant_left_eigenpair_with, vectorize, EigenOptions, FixedPointResult,
    Matrix, Vector,
};
use crate::models::{Hmm, Hqmm, ModelKind, MpsChain, Noom, OperatorModel, Psr, Ubm, Ulps, Umps};
use crate::scalar::Real;

/// Normalizers smaller than this are treated as zero.
pub const ZERO_PROBABILITY: f64 = 1e-300;

/// A joint score. `value` is the real part; `imag` is what was discarded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint<T: Real = f64> {
    pub value: T,
    pub imag: T,
}

impl<T: Real> Joint<T> {
    fn real(value: T) -> Self {
        Self {
            value,
            imag: T::zero(),
        }
    }

    fn from_complex(z: Complex<T>) -> Self {
        Self {
            value: z.re,
            imag: z.im,
        }
    }

    /// Imaginary part too large to be roundoff: `|im| > 1e-9·|re|`.
    pub fn is_flagged(&self) -> bool {
        self.imag.abs() > T::lit(1e-9) * self.value.abs() && self.imag.abs() > T::lit(1e-15)
    }
}

/// Anything that assigns a score to a finite observation sequence.
pub trait SequenceModel<T: Real> {
    fn kind(&self) -> ModelKind;

    fn obs_count(&self) -> usize;

    /// Score of `seq`, evaluated right to left as matrix-vector products
    /// (`seq[0]` is applied first).
    fn joint(&self, seq: &[usize]) -> Result<Joint<T>>;
}

pub(crate) fn check_sequence(seq: &[usize], obs_count: usize) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    check_symbols(seq, obs_count)
}

pub(crate) fn check_symbols(seq: &[usize], obs_count: usize) -> Result<()> {
    match seq.iter().find(|&&y| y >= obs_count) {
        Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, obs_count }),
        None => Ok(()),
    }
}

/// `σ† τ_{yT} ⋯ τ_{y1} ρ0`.
pub fn linear_score<T: Real, M: OperatorModel<T> + ?Sized>(m: &M, seq: &[usize]) -> Result<Complex<T>> {
    check_sequence(seq, m.obs_count())?;
    let x = seq
        .iter()
        .fold(m.initial_state(), |x, &y| m.apply_observable(y, &x));
    Ok(m.functional().dot(&x))
}

macro_rules! linear_sequence_model {
    ($($ty:ident),*) => {$(
        impl<T: Real> SequenceModel<T> for $ty<T> {
            fn kind(&self) -> ModelKind {
                $ty::kind(self)
            }
            fn obs_count(&self) -> usize {
                OperatorModel::obs_count(self)
            }
            fn joint(&self, seq: &[usize]) -> Result<Joint<T>> {
                linear_score(self, seq).map(Joint::from_complex)
            }
        }
    )*};
}

linear_sequence_model!(Umps, Psr, Hmm, Hqmm, Ulps);

impl<T: Real> SequenceModel<T> for Ubm<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Ubm
    }
    fn obs_count(&self) -> usize {
        self.cores().len()
    }
    fn joint(&self, seq: &[usize]) -> Result<Joint<T>> {
        check_sequence(seq, self.cores().len())?;
        let w = seq
            .iter()
            .fold(self.omega0().clone(), |w, &y| self.cores()[y].mul_vec(&w));
        Ok(Joint::real(self.alpha().dot(&w).norm_sqr()))
    }
}

impl<T: Real> SequenceModel<T> for Noom<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::Noom
    }
    fn obs_count(&self) -> usize {
        self.phis().len()
    }
    fn joint(&self, seq: &[usize]) -> Result<Joint<T>> {
        check_sequence(seq, self.phis().len())?;
        let psi = seq
            .iter()
            .fold(self.psi0().clone(), |p, &y| self.phis()[y].mul_vec(&p));
        let n = psi.norm2();
        Ok(Joint::real(n * n))
    }
}

impl<T: Real> SequenceModel<T> for MpsChain<T> {
    fn kind(&self) -> ModelKind {
        ModelKind::MpsChain
    }
    fn obs_count(&self) -> usize {
        MpsChain::obs_count(self)
    }
    /// Only sequences of exactly the chain length have a score.
    fn joint(&self, seq: &[usize]) -> Result<Joint<T>> {
        check_sequence(seq, self.obs_count())?;
        if seq.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "sequence of length {} on a chain of {} sites",
                seq.len(),
                self.len()
            )));
        }
        let x = seq
            .iter()
            .zip(self.sites())
            .fold(Vector::ones(1), |x, (&y, site)| site[y].mul_vec(&x));
        Ok(Joint::from_complex(x[0]))
    }
}

/// Normalized filtering state plus the accumulated log-probability of the
/// observed prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState<T: Real = f64> {
    pub kind: ModelKind,
    /// `x_t` (HMM, PSR), `ψ_t` (NOOM) or `vec(ρ_t)` (HQMM).
    pub state: Vector<T>,
    /// `Σ ln |P(y_t | prefix)|`.
    pub log_prob: T,
    /// Sign of the prefix probability; only PSRs can go negative.
    pub sign: T,
    /// Number of observations absorbed.
    pub steps: usize,
}

impl<T: Real> FilterState<T> {
    fn initial(kind: ModelKind, state: Vector<T>) -> Self {
        Self {
            kind,
            state,
            log_prob: T::zero(),
            sign: T::one(),
            steps: 0,
        }
    }

    /// `sign · exp(log_prob)`.
    pub fn prefix_probability(&self) -> T {
        self.sign * self.log_prob.exp()
    }

    /// Successor state after an observation with conditional probability
    /// `p` (only the real part enters the log).
    fn advance(&self, state: Vector<T>, p: T) -> Self {
        Self {
            kind: self.kind,
            state,
            log_prob: self.log_prob + p.abs().ln(),
            sign: if p < T::zero() { -self.sign } else { self.sign },
            steps: self.steps + 1,
        }
    }
}

fn zero_guard<T: Real>(p: T, position: usize) -> Result<()> {
    if p > T::lit(ZERO_PROBABILITY) {
        Ok(())
    } else {
        Err(Error::ZeroProbabilityPrefix { position })
    }
}

/// Recursive state update conditioned on observations.
pub trait Filter<T: Real>: SequenceModel<T> {
    fn filter_init(&self) -> FilterState<T>;

    fn filter_step(&self, st: &FilterState<T>, y: usize) -> Result<FilterState<T>>;

    /// `P(y | state)` for every observation `y`.
    fn predict(&self, st: &FilterState<T>) -> Result<Vec<T>>;

    /// States after each prefix of `seq`, starting with the initial state.
    fn filter_sequence(&self, seq: &[usize]) -> Result<Vec<FilterState<T>>> {
        check_symbols(seq, self.obs_count())?;
        let mut out = Vec::with_capacity(seq.len() + 1);
        out.push(self.filter_init());
        for &y in seq {
            let next = self.filter_step(out.last().expect("nonempty"), y)?;
            out.push(next);
        }
        Ok(out)
    }
}

fn check_state<T: Real>(st: &FilterState<T>, kind: ModelKind, dim: usize) -> Result<()> {
    if st.kind != kind || st.state.dim() != dim {
        return Err(Error::StateMismatch(format!(
            "{} state of dimension {} given to a {kind} of dimension {dim}",
            st.kind,
            st.state.dim()
        )));
    }
    Ok(())
}

/// Linear filtering for models with an explicit functional (HMM, PSR, HQMM).
fn linear_step<T: Real, M: OperatorModel<T> + SequenceModel<T>>(
    m: &M,
    st: &FilterState<T>,
    y: usize,
) -> Result<FilterState<T>> {
    check_state(st, SequenceModel::kind(m), m.operator_dim())?;
    check_symbols(&[y], OperatorModel::obs_count(m))?;
    let x = m.apply_observable(y, &st.state);
    let p = m.functional().dot(&x);
    if !(p.norm() > T::lit(ZERO_PROBABILITY)) {
        return Err(Error::ZeroProbabilityPrefix { position: st.steps });
    }
    Ok(st.advance(x.scale(p.inv()), p.re))
}

fn linear_predict<T: Real, M: OperatorModel<T> + SequenceModel<T>>(
    m: &M,
    st: &FilterState<T>,
) -> Result<Vec<T>> {
    check_state(st, SequenceModel::kind(m), m.operator_dim())?;
    let sigma = m.functional();
    Ok((0..OperatorModel::obs_count(m))
        .map(|y| sigma.dot(&m.apply_observable(y, &st.state)).re)
        .collect())
}

macro_rules! linear_filter {
    ($($ty:ident),*) => {$(
        impl<T: Real> Filter<T> for $ty<T> {
            fn filter_init(&self) -> FilterState<T> {
                FilterState::initial(ModelKind::$ty, self.initial_state())
            }
            fn filter_step(&self, st: &FilterState<T>, y: usize) -> Result<FilterState<T>> {
                linear_step(self, st, y)
            }
            fn predict(&self, st: &FilterState<T>) -> Result<Vec<T>> {
                linear_predict(self, st)
            }
        }
    )*};
}

linear_filter!(Psr, Hmm, Hqmm);

impl<T: Real> Filter<T> for Noom<T> {
    fn filter_init(&self) -> FilterState<T> {
        FilterState::initial(ModelKind::Noom, self.psi0().clone())
    }

    fn filter_step(&self, st: &FilterState<T>, y: usize) -> Result<FilterState<T>> {
        check_state(st, ModelKind::Noom, self.state_dim())?;
        check_symbols(&[y], self.phis().len())?;
        let psi = self.phis()[y].mul_vec(&st.state);
        let norm = psi.norm2();
        let p = norm * norm;
        zero_guard(p, st.steps)?;
        Ok(st.advance(psi.scale_real(norm.recip()), p))
    }

    fn predict(&self, st: &FilterState<T>) -> Result<Vec<T>> {
        check_state(st, ModelKind::Noom, self.state_dim())?;
        Ok(self
            .phis()
            .iter()
            .map(|phi| {
                let n = phi.mul_vec(&st.state).norm2();
                n * n
            })
            .collect())
    }
}

/// Dominant left eigenpair of the (lifted) transfer operator.
pub fn transfer_fixed_point<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    opts: &EigenOptions<T>,
) -> Result<FixedPointResult<T>> {
    dominant_left_eigenpair_with(&m.transfer_operator(), opts)
}

fn check_fixed_point<T: Real, M: OperatorModel<T> + ?Sized>(m: &M, fp: &FixedPointResult<T>) -> Result<()> {
    if fp.fixed_point.dim() != m.operator_dim() {
        return Err(Error::DimensionMismatch(format!(
            "fixed point of dimension {} for an operator of dimension {}",
            fp.fixed_point.dim(),
            m.operator_dim()
        )));
    }
    Ok(())
}

/// State after the prefix, rescaled to unit norm at each step (ratios of
/// linear functionals are unaffected).
fn prefix_state<T: Real, M: OperatorModel<T> + ?Sized>(m: &M, prefix: &[usize]) -> Result<Vector<T>> {
    let mut x = m.initial_state();
    for (t, &y) in prefix.iter().enumerate() {
        x = m.apply_observable(y, &x);
        let n = x.norm2();
        if !(n > T::lit(ZERO_PROBABILITY)) {
            return Err(Error::ZeroProbabilityPrefix { position: t });
        }
        x = x.scale_real(n.recip());
    }
    Ok(x)
}

/// `P(y | prefix)` for every `y` in the non-terminating limit, with the
/// fixed point σ* standing in for the effective evaluation functional:
/// `σ*† τ_y x / σ*† τ x`.
pub fn conditional_distribution<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    fp: &FixedPointResult<T>,
) -> Result<Vec<T>> {
    check_fixed_point(m, fp)?;
    check_symbols(prefix, m.obs_count())?;
    let x = prefix_state(m, prefix)?;
    let s = &fp.fixed_point;
    let nums: Vec<Complex<T>> = (0..m.obs_count())
        .map(|y| s.dot(&m.apply_observable(y, &x)))
        .collect();
    let den: Complex<T> = nums.iter().copied().sum();
    if !(den.norm() > T::lit(ZERO_PROBABILITY)) {
        return Err(Error::ZeroProbabilityPrefix {
            position: prefix.len(),
        });
    }
    Ok(nums.into_iter().map(|z| (z / den).re).collect())
}

/// [`conditional_distribution`] for a single next observation.
pub fn conditional_nonterminating<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    next: usize,
    fp: &FixedPointResult<T>,
) -> Result<T> {
    check_symbols(&[next], m.obs_count())?;
    Ok(conditional_distribution(m, prefix, fp)?[next])
}

/// `σ_0, …, σ_steps` with `σ_{t+1} ∝ (τ/λ*)† σ_t`, each of unit 2-norm.
pub fn effective_functional_trajectory<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    steps: usize,
    lambda: Complex<T>,
) -> Result<Vec<Vector<T>>> {
    let inv = lambda.conj().inv();
    let mut s = m
        .functional()
        .normalized()
        .ok_or_else(|| Error::InvalidModel("zero evaluation functional".into()))?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s.clone());
    for _ in 0..steps {
        s = m
            .apply_transfer_adjoint(&s)
            .scale(inv)
            .normalized()
            .ok_or(Error::DegenerateSpectrum { ratio: 1.0 })?;
        out.push(s.clone());
    }
    Ok(out)
}

/// The effective evaluation functional after `steps` applications of the
/// rescaled adjoint transfer operator.
pub fn effective_functional<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    steps: usize,
    opts: &EigenOptions<T>,
) -> Result<Vector<T>> {
    let fp = transfer_fixed_point(m, opts)?;
    Ok(effective_functional_trajectory(m, steps, fp.eigenvalue)?
        .pop()
        .expect("nonempty trajectory"))
}

/// `min_θ ‖a − e^{iθ} b‖`.
pub fn phase_aligned_distance<T: Real>(a: &Vector<T>, b: &Vector<T>) -> T {
    let overlap = b.dot(a);
    let phase = if overlap.norm() > T::zero() {
        overlap / overlap.norm()
    } else {
        Complex::one()
    };
    (a - &b.scale(phase)).norm2()
}

/// `σ*` as a phase-canonical unit vector, for comparison with
/// [`effective_functional`] output.
pub fn canonical_direction<T: Real>(v: &Vector<T>) -> Option<Vector<T>> {
    let mut u = v.normalized()?;
    canonicalize_phase(&mut u);
    Some(u)
}

/// `vec(𝕀_n)`.
pub fn vec_identity<T: Real>(n: usize) -> Vector<T> {
    vectorize(&Matrix::identity(n))
}

/// Density matrix of a lifted state.
pub fn density_matrix<T: Real>(state: &Vector<T>) -> Matrix<T> {
    crate::models::unvec_square(state)
}
