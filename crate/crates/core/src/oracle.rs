//! Brute-force reference computations: exhaustive enumeration, finite-N
//! marginals, bounded-length equivalence checks and ancestral sampling.

use num_complex::Complex;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluate::{
    check_symbols, conditional_distribution, transfer_fixed_point, Filter, SequenceModel,
};
use crate::linalg::{EigenOptions, Vector};
use crate::models::OperatorModel;
use crate::scalar::Real;

/// Largest number of sequences any single enumeration may visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// `obs^len`, or `TooLarge` past [`ENUMERATION_LIMIT`].
pub fn sequence_count(obs_count: usize, length: usize) -> Result<usize> {
    let mut count: u128 = 1;
    for _ in 0..length {
        count = count.saturating_mul(obs_count as u128);
        if count > ENUMERATION_LIMIT {
            return Err(Error::TooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
    }
    Ok(count as usize)
}

/// The `index`-th sequence of the given length in lexicographic order.
pub fn sequence_at(index: usize, obs_count: usize, length: usize) -> Vec<usize> {
    let mut seq = vec![0; length];
    let mut rest = index;
    for slot in seq.iter_mut().rev() {
        *slot = rest % obs_count;
        rest /= obs_count;
    }
    seq
}

/// Joint values of every sequence of one length, in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T: Real = f64> {
    pub length: usize,
    pub obs_count: usize,
    pub values: Vec<T>,
}

impl<T: Real> Distribution<T> {
    pub fn get(&self, seq: &[usize]) -> Option<T> {
        if seq.len() != self.length || seq.iter().any(|&y| y >= self.obs_count) {
            return None;
        }
        let idx = seq.iter().fold(0usize, |acc, &y| acc * self.obs_count + y);
        self.values.get(idx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (sequence_at(i, self.obs_count, self.length), v))
    }

    /// Sum in enumeration order.
    pub fn total(&self) -> T {
        self.values.iter().copied().fold(T::zero(), |a, b| a + b)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Joint of every sequence of `length`, evaluated in parallel.
pub fn enumerate_joint<T, M>(m: &M, length: usize) -> Result<Distribution<T>>
where
    T: Real,
    M: SequenceModel<T> + Sync + ?Sized,
{
    if length == 0 {
        return Err(Error::EmptySequence);
    }
    let obs = m.obs_count();
    let count = sequence_count(obs, length)?;
    let values = (0..count)
        .into_par_iter()
        .map(|i| m.joint(&sequence_at(i, obs, length)).map(|j| j.value))
        .collect::<Result<Vec<T>>>()?;
    Ok(Distribution {
        length,
        obs_count: obs,
        values,
    })
}

fn apply_prefix<T: Real, M: OperatorModel<T> + ?Sized>(m: &M, prefix: &[usize]) -> Result<Vector<T>> {
    check_symbols(prefix, m.obs_count())?;
    Ok(prefix
        .iter()
        .fold(m.initial_state(), |x, &y| m.apply_observable(y, &x)))
}

/// `σ† τ^{N−t} τ_{y_t} ⋯ τ_{y_1} ρ0` with the summed transfer operator
/// applied one step at a time.
pub fn finite_marginal_complex<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    total_len: usize,
) -> Result<Complex<T>> {
    if total_len < prefix.len() {
        return Err(Error::InvalidParameter(format!(
            "total length {total_len} shorter than prefix length {}",
            prefix.len()
        )));
    }
    let mut x = apply_prefix(m, prefix)?;
    for _ in prefix.len()..total_len {
        x = m.apply_transfer(&x);
    }
    Ok(m.functional().dot(&x))
}

/// Real part of [`finite_marginal_complex`].
pub fn finite_marginal<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    total_len: usize,
) -> Result<T> {
    finite_marginal_complex(m, prefix, total_len).map(|z| z.re)
}

/// `finite_marginal(prefix ∥ y, N) / finite_marginal(prefix, N)` for every
/// `y`, with both the state and the backward functional renormalized at each
/// step so that large `N` neither overflows nor underflows.
pub fn finite_conditional_distribution<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    total_len: usize,
) -> Result<Vec<T>> {
    if total_len <= prefix.len() {
        return Err(Error::InvalidParameter(format!(
            "total length {total_len} leaves no room after a prefix of length {}",
            prefix.len()
        )));
    }
    check_symbols(prefix, m.obs_count())?;
    let mut x = m.initial_state();
    for (t, &y) in prefix.iter().enumerate() {
        x = m.apply_observable(y, &x);
        x = x.normalized().ok_or(Error::ZeroProbabilityPrefix { position: t })?;
    }
    let mut s = m
        .functional()
        .normalized()
        .ok_or_else(|| Error::InvalidModel("zero evaluation functional".into()))?;
    for _ in prefix.len() + 1..total_len {
        s = m
            .apply_transfer_adjoint(&s)
            .normalized()
            .ok_or(Error::ZeroProbabilityPrefix {
                position: prefix.len(),
            })?;
    }
    let nums: Vec<Complex<T>> = (0..m.obs_count())
        .map(|y| s.dot(&m.apply_observable(y, &x)))
        .collect();
    let den: Complex<T> = nums.iter().copied().sum();
    if !(den.norm() > T::min_positive_value()) {
        return Err(Error::ZeroProbabilityPrefix {
            position: prefix.len(),
        });
    }
    Ok(nums.into_iter().map(|z| (z / den).re).collect())
}

/// Single entry of [`finite_conditional_distribution`].
pub fn finite_conditional<T: Real, M: OperatorModel<T> + ?Sized>(
    m: &M,
    prefix: &[usize],
    next: usize,
    total_len: usize,
) -> Result<T> {
    check_symbols(&[next], m.obs_count())?;
    Ok(finite_conditional_distribution(m, prefix, total_len)?[next])
}

/// What [`equivalent`] compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    /// Joint values of every sequence.
    Joint,
    /// Non-terminating conditionals `P(y | prefix)`.
    Conditional,
}

impl Semantics {
    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Joint => "joint",
            Semantics::Conditional => "conditional",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "joint" => Some(Semantics::Joint),
            "conditional" => Some(Semantics::Conditional),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport<T: Real = f64> {
    pub semantics: Semantics,
    pub max_len: usize,
    pub max_deviation: T,
    /// Lexicographically smallest sequence attaining the maximum deviation.
    /// For conditional semantics the last symbol is the predicted one.
    pub witness: Vec<usize>,
    pub sequences_compared: usize,
    pub tol: T,
}

impl<T: Real> EquivalenceReport<T> {
    pub fn is_equivalent(&self) -> bool {
        self.max_deviation <= self.tol
    }
}

#[derive(Clone, Default)]
struct Worst<T: Real> {
    dev: Option<T>,
    witness: Vec<usize>,
}

impl<T: Real> Worst<T> {
    fn offer(&mut self, dev: T, seq: &[usize]) {
        let dev = if dev.is_nan() { T::infinity() } else { dev };
        let better = match self.dev {
            None => true,
            Some(best) => dev > best || (dev == best && seq < self.witness.as_slice()),
        };
        if better {
            self.dev = Some(dev);
            self.witness = seq.to_vec();
        }
    }
}

fn same_alphabet(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "observation alphabets of size {a} and {b}"
        )));
    }
    Ok(())
}

/// Compares joints of every sequence of length `1..=max_len`.
pub fn equivalent_joint<T, A, B>(a: &A, b: &B, max_len: usize, tol: T) -> Result<EquivalenceReport<T>>
where
    T: Real,
    A: SequenceModel<T> + Sync + ?Sized,
    B: SequenceModel<T> + Sync + ?Sized,
{
    same_alphabet(a.obs_count(), b.obs_count())?;
    let mut worst = Worst::default();
    let mut compared = 0;
    for len in 1..=max_len {
        let da = enumerate_joint(a, len)?;
        let db = enumerate_joint(b, len)?;
        for (i, (x, y)) in da.values.iter().zip(&db.values).enumerate() {
            worst.offer((*x - *y).abs(), &sequence_at(i, da.obs_count, len));
        }
        compared += da.values.len();
    }
    Ok(EquivalenceReport {
        semantics: Semantics::Joint,
        max_len,
        max_deviation: worst.dev.unwrap_or_else(T::zero),
        witness: worst.witness,
        sequences_compared: compared,
        tol,
    })
}

/// Compares non-terminating conditionals after every prefix of length
/// `0..max_len`, each model using its own transfer fixed point. Prefixes of
/// probability zero under both models are skipped.
pub fn equivalent_conditional<T, A, B>(
    a: &A,
    b: &B,
    max_len: usize,
    tol: T,
    eigen: &EigenOptions<T>,
) -> Result<EquivalenceReport<T>>
where
    T: Real,
    A: OperatorModel<T> + Sync + ?Sized,
    B: OperatorModel<T> + Sync + ?Sized,
{
    same_alphabet(a.obs_count(), b.obs_count())?;
    let obs = a.obs_count();
    let fa = transfer_fixed_point(a, eigen)?;
    let fb = transfer_fixed_point(b, eigen)?;
    let mut worst = Worst::default();
    let mut compared = 0;
    for len in 0..max_len {
        let count = sequence_count(obs, len)?;
        let rows = (0..count)
            .into_par_iter()
            .map(|i| {
                let prefix = sequence_at(i, obs, len);
                let pa = undefined_if_zero(conditional_distribution(a, &prefix, &fa))?;
                let pb = undefined_if_zero(conditional_distribution(b, &prefix, &fb))?;
                Ok((prefix, pa, pb))
            })
            .collect::<Result<Vec<_>>>()?;
        for (prefix, pa, pb) in rows {
            // Both undefined: nothing to compare. One undefined: infinitely far.
            let (pa, pb) = match (pa, pb) {
                (None, None) => continue,
                (Some(pa), Some(pb)) => (pa, pb),
                _ => {
                    let mut seq = prefix.clone();
                    seq.push(0);
                    worst.offer(T::infinity(), &seq);
                    continue;
                }
            };
            for (y, (x, z)) in pa.iter().zip(&pb).enumerate() {
                let mut seq = prefix.clone();
                seq.push(y);
                worst.offer((*x - *z).abs(), &seq);
                compared += 1;
            }
        }
    }
    Ok(EquivalenceReport {
        semantics: Semantics::Conditional,
        max_len,
        max_deviation: worst.dev.unwrap_or_else(T::zero),
        witness: worst.witness,
        sequences_compared: compared,
        tol,
    })
}

fn undefined_if_zero<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroProbabilityPrefix { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Dispatches on `semantics`.
pub fn equivalent<T, A, B>(
    a: &A,
    b: &B,
    max_len: usize,
    tol: T,
    semantics: Semantics,
    eigen: &EigenOptions<T>,
) -> Result<EquivalenceReport<T>>
where
    T: Real,
    A: SequenceModel<T> + OperatorModel<T> + Sync + ?Sized,
    B: SequenceModel<T> + OperatorModel<T> + Sync + ?Sized,
{
    match semantics {
        Semantics::Joint => equivalent_joint(a, b, max_len, tol),
        Semantics::Conditional => equivalent_conditional(a, b, max_len, tol, eigen),
    }
}

/// Seedable generator used for sampling: xoshiro256++ seeded through
/// SplitMix64, uniforms from the top 53 bits.
#[derive(Clone, Debug)]
pub struct SampleRng {
    inner: Xoshiro256PlusPlus,
}

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`: `(x >> 11) · 2⁻⁵³`.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Draws one index from non-negative weights (which need not sum to 1).
fn draw(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    // Roundoff at the top end: last symbol with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// One sequence drawn from the chain of predicted conditionals.
pub fn sample_with<T: Real, M: Filter<T> + ?Sized>(m: &M, length: usize, rng: &mut SampleRng) -> Result<Vec<usize>> {
    let tol = T::validate_tol();
    let mut st = m.filter_init();
    let mut seq = Vec::with_capacity(length);
    for t in 0..length {
        let probs = m.predict(&st)?;
        let mut weights = Vec::with_capacity(probs.len());
        for &p in &probs {
            if p < -tol {
                return Err(Error::NegativeConditional {
                    position: t,
                    value: p.as_f64(),
                });
            }
            weights.push(p.max(T::zero()).as_f64());
        }
        let y = draw(&weights, rng.next_uniform());
        st = m.filter_step(&st, y)?;
        seq.push(y);
    }
    Ok(seq)
}

/// A single sequence, deterministic in `seed`.
pub fn sample<T: Real, M: Filter<T> + ?Sized>(m: &M, length: usize, seed: u64) -> Result<Vec<usize>> {
    sample_with(m, length, &mut SampleRng::new(seed))
}

/// `count` sequences drawn consecutively from one generator stream.
pub fn sample_many<T: Real, M: Filter<T> + ?Sized>(
    m: &M,
    length: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let mut rng = SampleRng::new(seed);
    (0..count).map(|_| sample_with(m, length, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::models::{Hmm, Psr};

    fn appendix() -> Psr<f64> {
        Psr::new(
            Vector::ones(2),
            vec![
                Matrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 0.5]]),
                Matrix::from_real_rows(&[&[0.25, 0.5], &[0.75, 0.0]]),
            ],
            Vector::from_real(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn lexicographic_order() {
        assert_eq!(sequence_at(0, 2, 3), vec![0, 0, 0]);
        assert_eq!(sequence_at(1, 2, 3), vec![0, 0, 1]);
        assert_eq!(sequence_at(6, 2, 3), vec![1, 1, 0]);
        assert!(matches!(sequence_count(10, 8), Err(Error::TooLarge { .. })));
        assert_eq!(sequence_count(10, 7).unwrap(), 10_000_000);
    }

    #[test]
    fn deterministic_hmm_distribution() {
        let h = Hmm::<f64>::from_real(&[&[1.0, 0.0], &[0.0, 1.0]], &[&[1.0, 1.0]], &[1.0, 0.0]).unwrap();
        let d = enumerate_joint(&h, 3).unwrap();
        assert_eq!(d.values, vec![1.0]);
        assert_eq!(d.get(&[0, 0, 0]), Some(1.0));
        assert_eq!(sample(&h, 5, 7).unwrap(), vec![0; 5]);
    }

    #[test]
    fn appendix_distribution() {
        let d = enumerate_joint(&appendix(), 2).unwrap();
        assert!((d.get(&[1, 1]).unwrap() - 0.625).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psr_marginal_ignores_horizon() {
        let p = appendix();
        let a = finite_marginal(&p, &[1], 1).unwrap();
        let b = finite_marginal(&p, &[1], 40).unwrap();
        assert!((a - b).abs() < 1e-14 && (a - 1.0).abs() < 1e-15);
        assert!(finite_marginal(&p, &[1, 1], 1).is_err());
    }

    #[test]
    fn self_equivalence() {
        let p = appendix();
        let r = equivalent_joint(&p, &p, 4, 1e-12).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert_eq!(r.witness, vec![0]);
        assert_eq!(r.sequences_compared, 2 + 4 + 8 + 16);
        let rc = equivalent_conditional(&p, &p, 3, 1e-12, &EigenOptions::default()).unwrap();
        assert!(rc.is_equivalent());
    }

    #[test]
    fn sampling_is_seeded() {
        let p = appendix();
        let a = sample_many(&p, 6, 20, 42).unwrap();
        let b = sample_many(&p, 6, 20, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_many(&p, 6, 20, 43).unwrap());
    }

    #[test]
    fn negative_psr_refuses_to_sample() {
        let p = Psr::<f64>::new(
            Vector::ones(1),
            vec![Matrix::from_real_rows(&[&[1.5]]), Matrix::from_real_rows(&[&[-0.5]])],
            Vector::ones(1),
        )
        .unwrap();
        assert!(matches!(sample(&p, 3, 0), Err(Error::NegativeConditional { position: 0, .. })));
    }

    #[test]
    fn uniform_draws_are_in_range() {
        let mut r = SampleRng::new(0);
        for _ in 0..1000 {
            let u = r.next_uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
