//! Named reference instances and seeded random generators for every model
//! class.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::any::AnyModel;
use crate::controlled::{IoHqmm, Pomdp, Qomdp};
use crate::convert::hmm_to_psr;
use crate::error::{Error, Result};
use crate::evaluate::{Filter, SequenceModel};
use crate::linalg::{Matrix, Vector};
use crate::models::{Hmm, Hqmm, KrausSet, ModelKind, MpsChain, Noom, Psr, Ubm, Ulps, Umps};
use crate::scalar::Real;

/// A property the instance is known to have, with the value it should
/// measure to.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedFact {
    pub key: &'static str,
    pub description: &'static str,
    pub expected: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedInstance<M> {
    pub name: &'static str,
    pub model: M,
    pub provenance: &'static str,
    pub expected_facts: Vec<ExpectedFact>,
}

impl<M> NamedInstance<M> {
    pub fn fact(&self, key: &str) -> Option<&ExpectedFact> {
        self.expected_facts.iter().find(|f| f.key == key)
    }
}

fn fact(key: &'static str, description: &'static str, expected: Vec<f64>, tolerance: f64) -> ExpectedFact {
    ExpectedFact {
        key,
        description,
        expected,
        tolerance,
    }
}

/// Two-state model with a three-dimensional-looking predictive state space
/// that is in fact two-dimensional: observation 1 drives the state from
/// `x0` to `x1` to `x2 = 0.6 x0 + 0.4 x1`.
///
/// Stored as a PSR since the operators do not factor as `diag(C_y) A`.
pub fn appendix_hmm() -> NamedInstance<Psr> {
    let t0 = Matrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 0.5]]);
    let t1 = Matrix::from_real_rows(&[&[0.25, 0.5], &[0.75, 0.0]]);
    let model = Psr::new(Vector::ones(2), vec![t0, t1], Vector::from_real(&[1.0, 0.0]))
        .expect("literal shapes are consistent");
    NamedInstance {
        name: "appendix_hmm",
        model,
        provenance: "hand-built two-state example with a linear dependence among predictive states",
        expected_facts: vec![
            fact("x1", "predictive state after observing 1", vec![0.25, 0.75], 1e-12),
            fact("x2", "predictive state after observing 1 1", vec![0.7, 0.3], 1e-12),
            fact(
                "x2_minus_mix",
                "x2 - (0.6 x0 + 0.4 x1)",
                vec![0.0, 0.0],
                1e-12,
            ),
            fact("det_x0_x1", "det [x0 x1]", vec![0.75], 1e-12),
            fact("joint_1_1", "P(1 1)", vec![0.625], 1e-12),
            fact(
                "transfer_column_sums",
                "column sums of the summed operators",
                vec![1.0, 1.0],
                1e-12,
            ),
        ],
    }
}

/// Predictive states of the appendix instance along `1 1`, with `x0`
/// first.
fn appendix_states(p: &Psr) -> Result<Vec<Vector>> {
    let states = p.filter_sequence(&[1, 1])?;
    Ok(states.into_iter().map(|s| s.state).collect())
}

/// Measure a fact of [`appendix_hmm`] from the model itself.
pub fn measure_appendix(p: &Psr, key: &str) -> Result<Vec<f64>> {
    let xs = appendix_states(p)?;
    let re = |v: &Vector| v.real_parts();
    Ok(match key {
        "x1" => re(&xs[1]),
        "x2" => re(&xs[2]),
        "x2_minus_mix" => {
            let mix = Vector::from_fn(2, |i| xs[0][i].scale(0.6) + xs[1][i].scale(0.4));
            (0..2).map(|i| (xs[2][i] - mix[i]).re).collect()
        }
        "det_x0_x1" => vec![(xs[0][0] * xs[1][1] - xs[0][1] * xs[1][0]).re],
        "joint_1_1" => vec![p.joint(&[1, 1])?.value],
        "transfer_column_sums" => {
            let n = p.dim();
            (0..n)
                .map(|j| {
                    p.ops()
                        .iter()
                        .map(|t| (0..n).map(|i| t[(i, j)].re).sum::<f64>())
                        .sum()
                })
                .collect()
        }
        other => return Err(Error::InvalidParameter(format!("unknown fact '{other}'"))),
    })
}

pub const OSCILLATION_HORIZON: usize = 20;

/// `true` when `P(0 | 0^t)` should dip within [`OSCILLATION_HORIZON`]
/// steps: `φ0` has a complex eigenpair `r e^{±iω}` and the half period
/// `π/ω` of `|⟨·, ψ_t⟩|²` fits in the horizon.
pub fn oscillation_expected(theta: f64, damping: f64) -> bool {
    let s = damping.sqrt();
    let ratio = theta.cos() * (1.0 + s) / (2.0 * s.sqrt());
    if ratio.abs() >= 1.0 {
        return false;
    }
    std::f64::consts::PI / ratio.acos() + 2.0 <= OSCILLATION_HORIZON as f64
}

/// Two-dimensional NOOM whose probability of repeating observation 0 is
/// not monotone in the run length.
///
/// `φ0 = R(θ) diag(1, √d)`, `φ1 = diag(0, √(1-d))`, `ψ0 = e1`.
pub fn oscillating_noom(theta: f64, damping: f64) -> Result<NamedInstance<Noom>> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, pi), got {theta}")));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {damping}")));
    }
    let (s, c) = theta.sin_cos();
    let sd = damping.sqrt();
    let phi0 = Matrix::from_real_rows(&[&[c, -s * sd], &[s, c * sd]]);
    let phi1 = Matrix::from_real_rows(&[&[0.0, 0.0], &[0.0, (1.0 - damping).sqrt()]]);
    let model = Noom::new(vec![phi0, phi1], Vector::basis(2, 0))?;
    let mut facts = vec![
        fact("completeness_residual", "max |Σ φ†φ - I|", vec![0.0], 1e-12),
        fact("initial_norm", "‖ψ0‖", vec![1.0], 1e-12),
        fact("first_conditional", "P(0) with an empty prefix", vec![1.0], 1e-12),
    ];
    if oscillation_expected(theta, damping) {
        facts.push(fact(
            "clock_local_minimum",
            "P(0 | 0^t) has a strict local minimum for some t below the horizon (1 = yes)",
            vec![1.0],
            0.0,
        ));
    }
    Ok(NamedInstance {
        name: "oscillating_noom",
        model,
        provenance: "rotation composed with amplitude damping",
        expected_facts: facts,
    })
}

/// `P(0 | 0^t)` for `t = 0..horizon`.
pub fn repeat_conditionals(m: &Noom, horizon: usize) -> Result<Vec<f64>> {
    let states = m.filter_sequence(&vec![0; horizon])?;
    states.iter().map(|st| Ok(m.predict(st)?[0])).collect()
}

/// Indices `t` with `p[t-1] > p[t] < p[t+1]`.
pub fn strict_local_minima(p: &[f64]) -> Vec<usize> {
    (1..p.len().saturating_sub(1))
        .filter(|&t| p[t] < p[t - 1] && p[t] < p[t + 1])
        .collect()
}

pub fn measure_oscillating(m: &Noom, key: &str) -> Result<Vec<f64>> {
    Ok(match key {
        "completeness_residual" => {
            vec![m.completeness().max_abs_diff(&Matrix::identity(m.state_dim()))]
        }
        "initial_norm" => vec![m.psi0().norm2()],
        "first_conditional" => vec![m.predict(&m.filter_init())?[0]],
        "clock_local_minimum" => {
            let p = repeat_conditionals(m, OSCILLATION_HORIZON)?;
            vec![if strict_local_minima(&p).is_empty() { 0.0 } else { 1.0 }]
        }
        other => return Err(Error::InvalidParameter(format!("unknown fact '{other}'"))),
    })
}

/// Parameters for [`random_model_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub kind: ModelKind,
    /// Hidden or bond dimension.
    pub dim: usize,
    pub obs: usize,
    /// Only used by controlled kinds.
    pub actions: usize,
    /// Kraus operators per observation for HQMM, uLPS and IO-HQMM.
    pub kraus_rank: usize,
    /// Sites of an MPS chain.
    pub chain_len: usize,
    pub seed: u64,
}

impl RandomSpec {
    pub fn new(kind: ModelKind, dim: usize, obs: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            obs,
            actions: 2,
            kraus_rank: 2,
            chain_len: 4,
            seed,
        }
    }
}

pub fn random_model<T: Real>(kind: ModelKind, dim: usize, obs: usize, seed: u64) -> Result<AnyModel<T>> {
    random_model_with(&RandomSpec::new(kind, dim, obs, seed))
}

/// Draw a valid model of the requested kind. The same spec always gives
/// the same model.
pub fn random_model_with<T: Real>(spec: &RandomSpec) -> Result<AnyModel<T>> {
    if spec.dim == 0 || spec.obs == 0 {
        return Err(Error::InvalidParameter("dimension and alphabet size must be positive".into()));
    }
    if spec.kind.is_controlled() && spec.actions == 0 {
        return Err(Error::InvalidParameter("controlled models need at least one action".into()));
    }
    if spec.kraus_rank == 0 {
        return Err(Error::InvalidParameter("kraus rank must be positive".into()));
    }
    let mut g = Gen::new(spec.seed);
    let (n, o, r) = (spec.dim, spec.obs, spec.kraus_rank);
    Ok(match spec.kind {
        ModelKind::Hmm => AnyModel::Hmm(g.hmm(n, o)?),
        ModelKind::Psr => AnyModel::Psr(hmm_to_psr(&g.hmm(n, o)?)?),
        ModelKind::Umps => {
            let scale = 1.0 / ((n * o) as f64).sqrt();
            let cores = (0..o).map(|_| g.gauss_matrix(n, n, scale)).collect();
            AnyModel::Umps(Umps::new(g.gauss_vector(n), cores, g.gauss_vector(n))?)
        }
        ModelKind::Ubm => {
            let scale = 1.0 / ((n * o) as f64).sqrt();
            let cores = (0..o).map(|_| g.gauss_matrix(n, n, scale)).collect();
            AnyModel::Ubm(Ubm::new(g.gauss_vector(n), cores, g.gauss_vector(n))?)
        }
        ModelKind::Noom => {
            let phis = g.isometry_blocks(n, o);
            let psi = g.gauss_vector(n).normalized().expect("gaussian vector is nonzero");
            AnyModel::Noom(Noom::new(phis, psi)?)
        }
        ModelKind::Hqmm => {
            let sets = g.kraus_sets(n, o, r)?;
            AnyModel::Hqmm(Hqmm::from_density(sets, &g.density(n))?)
        }
        ModelKind::Ulps => {
            let scale = 1.0 / ((n * o * r) as f64).sqrt();
            let cores = (0..o)
                .map(|_| KrausSet::new((0..r).map(|_| g.gauss_matrix(n, n, scale)).collect()))
                .collect::<Result<Vec<_>>>()?;
            let left = KrausSet::single(g.gauss_matrix(1, n, 1.0))?;
            let right = KrausSet::single(g.gauss_matrix(n, 1, 1.0))?;
            AnyModel::Ulps(Ulps::new(left, cores, right)?)
        }
        ModelKind::MpsChain => AnyModel::MpsChain(g.chain(n, o, spec.chain_len.max(1))?),
        ModelKind::Pomdp => {
            let mut ts = Vec::new();
            let mut es = Vec::new();
            for _ in 0..spec.actions {
                ts.push(g.stochastic(n, n));
                es.push(g.stochastic(o, n));
            }
            AnyModel::Pomdp(Pomdp::new(ts, es, g.simplex_vector(n))?)
        }
        ModelKind::IoHqmm => {
            let banks = (0..spec.actions)
                .map(|_| g.kraus_sets(n, o, r))
                .collect::<Result<Vec<_>>>()?;
            AnyModel::IoHqmm(IoHqmm::new(banks, crate::linalg::vectorize(&g.density(n)))?)
        }
        ModelKind::Qomdp => {
            let ops = (0..spec.actions).map(|_| g.isometry_blocks(n, o)).collect();
            // pure start, so filtered states stay rank one
            let psi: Vector<T> = g.gauss_vector(n).normalized().expect("gaussian vector is nonzero");
            AnyModel::Qomdp(Qomdp::from_density(ops, &psi.outer(&psi))?)
        }
    })
}

struct Gen {
    rng: Xoshiro256PlusPlus,
}

impl Gen {
    fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    fn cgauss<T: Real>(&mut self, scale: f64) -> Complex<T> {
        let k = scale / std::f64::consts::SQRT_2;
        let (re, im) = (self.normal(), self.normal());
        Complex::new(T::lit(re * k), T::lit(im * k))
    }

    fn gauss_matrix<T: Real>(&mut self, rows: usize, cols: usize, scale: f64) -> Matrix<T> {
        Matrix::from_fn(rows, cols, |_, _| self.cgauss(scale))
    }

    fn gauss_vector<T: Real>(&mut self, n: usize) -> Vector<T> {
        Vector::from_fn(n, |_| self.cgauss(1.0))
    }

    fn simplex(&mut self, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| self.rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    fn simplex_vector<T: Real>(&mut self, n: usize) -> Vector<T> {
        let w = self.simplex(n);
        Vector::from_fn(n, |i| Complex::new(T::lit(w[i]), T::zero()))
    }

    /// Column-stochastic rows×cols matrix with Dirichlet(1) columns.
    fn stochastic<T: Real>(&mut self, rows: usize, cols: usize) -> Matrix<T> {
        let columns: Vec<Vec<f64>> = (0..cols).map(|_| self.simplex(rows)).collect();
        Matrix::from_fn(rows, cols, |i, j| Complex::new(T::lit(columns[j][i]), T::zero()))
    }

    fn hmm<T: Real>(&mut self, n: usize, o: usize) -> Result<Hmm<T>> {
        let a = self.stochastic(n, n);
        let c = self.stochastic(o, n);
        Hmm::new(a, c, self.simplex_vector(n))
    }

    /// `blocks` n×n matrices `K_j` with `Σ K_j† K_j = I`, cut from an
    /// isometry with orthonormal columns.
    fn isometry_blocks<T: Real>(&mut self, n: usize, blocks: usize) -> Vec<Matrix<T>> {
        let rows = n * blocks;
        let mut cols: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|_| (0..rows).map(|_| self.cgauss(1.0)).collect())
            .collect();
        for j in 0..n {
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for k in 0..j {
                    let (done, rest) = cols.split_at_mut(j);
                    let q = &done[k];
                    let v = &mut rest[0];
                    let proj: Complex<f64> = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= proj * qi;
                    }
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in cols[j].iter_mut() {
                *z /= norm;
            }
        }
        (0..blocks)
            .map(|b| {
                Matrix::from_fn(n, n, |i, j| {
                    let z = cols[j][b * n + i];
                    Complex::new(T::lit(z.re), T::lit(z.im))
                })
            })
            .collect()
    }

    fn kraus_sets<T: Real>(&mut self, n: usize, o: usize, r: usize) -> Result<Vec<KrausSet<T>>> {
        let mut blocks = self.isometry_blocks(n, o * r).into_iter();
        (0..o)
            .map(|_| KrausSet::new(blocks.by_ref().take(r).collect()))
            .collect()
    }

    /// `G G† / tr(G G†)` for a complex Gaussian `G`.
    fn density<T: Real>(&mut self, n: usize) -> Matrix<T> {
        let g: Matrix<T> = self.gauss_matrix(n, n, 1.0);
        let rho = g.matmul(&g.adjoint());
        let tr = rho.trace().re;
        rho.scale_real(T::one() / tr).hermitian_part()
    }

    /// Chain with nonnegative entries, rescaled so the joint over all
    /// length-`len` sequences sums to one.
    fn chain<T: Real>(&mut self, n: usize, o: usize, len: usize) -> Result<MpsChain<T>> {
        let mut sites: Vec<Vec<Matrix<T>>> = (0..len)
            .map(|k| {
                let rows = if k + 1 == len { 1 } else { n };
                let cols = if k == 0 { 1 } else { n };
                (0..o)
                    .map(|_| {
                        Matrix::from_fn(rows, cols, |_, _| {
                            Complex::new(T::lit(self.rng.random::<f64>() + 0.05), T::zero())
                        })
                    })
                    .collect()
            })
            .collect();
        let summed = |site: &Vec<Matrix<T>>| {
            crate::linalg::sum_matrices(site.iter()).expect("at least one observation")
        };
        let total = sites
            .iter()
            .map(summed)
            .fold(Matrix::identity(1), |acc, m| m.matmul(&acc))[(0, 0)]
            .re;
        for m in sites[0].iter_mut() {
            *m = m.scale_real(T::one() / total);
        }
        MpsChain::new(sites)
    }
}
