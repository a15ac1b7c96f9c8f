use num_complex::Complex64;
use proptest::prelude::*;
use seqmodels::controlled::{pomdp_to_psr_per_policy, qomdp_to_iohqmm, ControlledModel};
use seqmodels::convert::{kraus_to_liouville, liouville_to_kraus};
use seqmodels::evaluate::{Filter, SequenceModel};
use seqmodels::gallery::{random_model, random_model_with, RandomSpec};
use seqmodels::linalg::{hermitian_eigen, kron, unvectorize, vectorize, Matrix};
use seqmodels::oracle::{enumerate_joint, sample_many, sequence_at, sequence_count};
use seqmodels::{AnyModel, ModelKind};

fn cmatrix(n: usize, m: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * m)
        .prop_map(move |v| Matrix::from_fn(n, m, |i, j| Complex64::new(v[i * m + j].0, v[i * m + j].1)))
}

fn action_obs_sequences(a: usize, o: usize, len: usize) -> Vec<Vec<(usize, usize)>> {
    let count = sequence_count(a * o, len).unwrap();
    (0..count)
        .map(|i| sequence_at(i, a * o, len).into_iter().map(|s| (s / o, s % o)).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_of_product_is_kron_action(a in cmatrix(2, 3), x in cmatrix(3, 2), b in cmatrix(2, 2)) {
        let lhs = vectorize(&a.matmul(&x).matmul(&b));
        let rhs = kron(&b.transpose(), &a).mul_vec(&vectorize(&x));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        prop_assert_eq!(unvectorize(&vectorize(&x), 3, 2).unwrap(), x);
    }

    #[test]
    fn constructive_models_normalize(kind_ix in 0usize..4, seed in 0u64..10_000, n in 1usize..4, o in 1usize..4) {
        let kind = [ModelKind::Hmm, ModelKind::Psr, ModelKind::Noom, ModelKind::Hqmm][kind_ix];
        let m: AnyModel = random_model(kind, n, o, seed).unwrap();
        for len in 1..=3 {
            let d = enumerate_joint(&m, len).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
            prop_assert!(d.min() >= -1e-9);
        }
    }

    #[test]
    fn kraus_round_trip(seed in 0u64..10_000, n in 2usize..4, rank in 1usize..4) {
        let mut spec = RandomSpec::new(ModelKind::Hqmm, n, 1, seed);
        spec.kraus_rank = rank;
        let AnyModel::Hqmm(h) = random_model_with::<f64>(&spec).unwrap() else { unreachable!() };
        let l = kraus_to_liouville(&h.kraus_by_obs()[0]);
        let k = liouville_to_kraus(&l, 1e-10).unwrap();
        prop_assert!(kraus_to_liouville(&k).max_abs_diff(&l) < 1e-11);
        prop_assert_eq!(k.kraus_rank(), rank);
    }

    #[test]
    fn filtering_accumulates_joint(seed in 0u64..10_000, seq in prop::collection::vec(0usize..2, 1..6)) {
        let AnyModel::Hqmm(h) = random_model::<f64>(ModelKind::Hqmm, 2, 2, seed).unwrap() else { unreachable!() };
        let states = h.filter_sequence(&seq).unwrap();
        let p = states.last().unwrap().prefix_probability();
        prop_assert!((p - h.joint(&seq).unwrap().value).abs() <= 1e-12 * p.max(1e-300) + 1e-15);
        let rho = unvectorize(&states.last().unwrap().state, 2, 2).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controlled_joints_normalize(kind_ix in 0usize..3, seed in 0u64..10_000) {
        let kind = [ModelKind::Pomdp, ModelKind::IoHqmm, ModelKind::Qomdp][kind_ix];
        let m: AnyModel = random_model(kind, 2, 2, seed).unwrap();
        let c = m.as_controlled().unwrap();
        for actions in [[0, 0, 0], [1, 0, 1], [1, 1, 0]] {
            let mut total = 0.0;
            for code in 0..8usize {
                let seq: Vec<(usize, usize)> = (0..3).map(|t| (actions[t], (code >> t) & 1)).collect();
                total += c.controlled_joint(&seq).unwrap();
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn qomdp_forms_and_embedding_agree() {
    for seed in 0..10 {
        let AnyModel::Qomdp(q) = random_model::<f64>(ModelKind::Qomdp, 2, 2, seed).unwrap() else {
            unreachable!()
        };
        let io = qomdp_to_iohqmm(&q).unwrap();
        for len in 1..=3 {
            for seq in action_obs_sequences(2, 2, len) {
                let d = q.joint_density(&seq).unwrap();
                assert!((d - q.joint_vectorized(&seq).unwrap()).abs() < 1e-10);
                assert!((d - io.controlled_joint(&seq).unwrap()).abs() < 1e-12);
            }
        }
        let seq = [(0, 1), (1, 0), (1, 1), (0, 0)];
        let a = q.controlled_filter_sequence(&seq).unwrap();
        let b = io.controlled_filter_sequence(&seq).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.state.max_abs_diff(&y.state) < 1e-11);
            // unit Kraus rank keeps the state pure
            let ev = hermitian_eigen(&unvectorize(&x.state, 2, 2).unwrap()).unwrap();
            assert!(ev.values[0].abs() < 1e-9);
        }
    }
}

#[test]
fn pomdp_policy_operators_match_controlled_joint() {
    let AnyModel::Pomdp(p) = random_model::<f64>(ModelKind::Pomdp, 2, 2, 5).unwrap() else {
        unreachable!()
    };
    let actions = [0, 1, 0, 1];
    let ops = pomdp_to_psr_per_policy(&p, &actions).unwrap();
    for code in 0..16usize {
        let obs: Vec<usize> = (0..4).map(|t| (code >> t) & 1).collect();
        let seq: Vec<(usize, usize)> = actions.iter().copied().zip(obs.iter().copied()).collect();
        assert!((ops.joint(&obs).unwrap() - p.controlled_joint(&seq).unwrap()).abs() < 1e-14);
    }
    assert!(ops.as_stationary().is_none());
    let constant = pomdp_to_psr_per_policy(&p, &[1, 1]).unwrap().as_stationary().unwrap();
    let h = p.action_hmm(1).unwrap();
    assert!(seqmodels::oracle::equivalent_joint(&constant, &h, 3, 1e-14).unwrap().is_equivalent());
    assert!(pomdp_to_psr_per_policy(&p, &[]).is_err());
}

#[test]
fn sampled_frequencies_track_joint() {
    let AnyModel::Hmm(h) = random_model::<f64>(ModelKind::Hmm, 2, 2, 1).unwrap() else {
        unreachable!()
    };
    let draws = sample_many(&h, 2, 20_000, 9).unwrap();
    for seq in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        let freq = draws.iter().filter(|d| d.as_slice() == seq).count() as f64 / 20_000.0;
        let p = h.joint(&seq).unwrap().value;
        // four standard errors
        assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / 20_000.0).sqrt() + 1e-3, "{seq:?}");
    }
    assert_eq!(sample_many(&h, 5, 3, 42).unwrap(), sample_many(&h, 5, 3, 42).unwrap());
}
