use seqmodels::convert::{
    hqmm_to_ulps, liouville_to_kraus, kraus_to_liouville, choi_rank, ubm_to_noom, ubm_to_psr,
    ubm_to_ulps, ulps_to_hqmm, umps_to_psr, ConvertOptions,
};
use seqmodels::evaluate::{conditional_distribution, transfer_fixed_point, Filter, SequenceModel};
use seqmodels::gallery::{appendix_hmm, random_model, random_model_with, RandomSpec};
use seqmodels::linalg::EigenOptions;
use seqmodels::models::{OperatorModel, Validate};
use seqmodels::oracle::{
    equivalent_conditional, equivalent_joint, finite_conditional_distribution, sequence_at,
    sequence_count,
};
use seqmodels::{AnyModel, Hqmm, ModelKind, Noom, Ubm, Ulps, Umps};

fn prefixes(o: usize, max_len: usize) -> Vec<Vec<usize>> {
    (0..=max_len)
        .flat_map(|len| (0..sequence_count(o, len).unwrap()).map(move |i| sequence_at(i, o, len)))
        .collect()
}

fn umps(seed: u64, n: usize, o: usize) -> Umps {
    match random_model(ModelKind::Umps, n, o, seed).unwrap() {
        AnyModel::Umps(m) => m,
        _ => unreachable!(),
    }
}

fn ubm(seed: u64, n: usize, o: usize) -> Ubm {
    match random_model(ModelKind::Ubm, n, o, seed).unwrap() {
        AnyModel::Ubm(m) => m,
        _ => unreachable!(),
    }
}

fn ulps(seed: u64, n: usize, o: usize, rank: usize) -> Ulps {
    let mut spec = RandomSpec::new(ModelKind::Ulps, n, o, seed);
    spec.kraus_rank = rank;
    match random_model_with(&spec).unwrap() {
        AnyModel::Ulps(m) => m,
        _ => unreachable!(),
    }
}

fn max_gap<F: Filter<f64>>(conv: &F, reference: &dyn Fn(&[usize]) -> Vec<f64>, o: usize, len: usize) -> f64 {
    let mut worst = 0.0f64;
    for prefix in prefixes(o, len) {
        let states = conv.filter_sequence(&prefix).unwrap();
        let got = conv.predict(states.last().unwrap()).unwrap();
        for (a, b) in got.iter().zip(reference(&prefix)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn umps_psr_conditionals_match_long_horizon_marginals() {
    let opts = ConvertOptions::default();
    let mut checked = 0;
    for seed in 0..15 {
        let u = umps(seed, 2, 2);
        let Ok((psr, report)) = umps_to_psr(&u, &opts) else { continue };
        if report.fixed_point.spectral_gap() < 0.05 {
            continue;
        }
        assert!(psr.validate(1e-9).is_valid(), "seed {seed}");
        let oracle = |p: &[usize]| finite_conditional_distribution(&u, p, p.len() + 300).unwrap();
        assert!(max_gap(&psr, &oracle, 2, 3) < 1e-6, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 5);
}

#[test]
fn ubm_noom_is_complete_and_matches_oracle() {
    let opts = ConvertOptions::default();
    for seed in 0..10 {
        let b = ubm(seed, 2 + (seed as usize % 2), 2);
        let (noom, report): (Noom, _) = ubm_to_noom(&b, &opts).unwrap();
        assert!(report.residual("completeness").unwrap() < 1e-9);
        assert!(noom.validate(1e-9).is_valid());
        let oracle = |p: &[usize]| finite_conditional_distribution(&b, p, p.len() + 300).unwrap();
        assert!(max_gap(&noom, &oracle, 2, 3) < 1e-6, "seed {seed}");
    }
}

#[test]
fn ubm_lift_preserves_joint() {
    for seed in 0..10 {
        let b = ubm(seed, 3, 3);
        let lifted = ubm_to_psr(&b).unwrap();
        let via_ulps = ubm_to_ulps(&b).unwrap();
        let r = equivalent_joint(&b, &lifted, 3, 1e-12).unwrap();
        assert!(r.is_equivalent(), "{r:?}");
        assert!(equivalent_joint(&b, &via_ulps, 3, 1e-12).unwrap().is_equivalent());
    }
}

#[test]
fn ulps_hqmm_is_valid_and_matches_oracle() {
    let opts = ConvertOptions::default();
    for seed in 0..8 {
        let u = ulps(seed, 2, 2, 1 + seed as usize % 2);
        let (h, report): (Hqmm, _) = ulps_to_hqmm(&u, &opts).unwrap();
        assert!(report.residual("trace_preserving").unwrap() < 1e-9);
        let v = h.validate(1e-9);
        assert!(v.is_valid(), "seed {seed}: {v}");
        let oracle = |p: &[usize]| finite_conditional_distribution(&u, p, p.len() + 300).unwrap();
        assert!(max_gap(&h, &oracle, 2, 3) < 1e-6, "seed {seed}");
    }
}

#[test]
fn hqmm_ulps_round_trip() {
    let opts = ConvertOptions::default();
    for seed in 0..5 {
        let h = match random_model(ModelKind::Hqmm, 2, 2, seed).unwrap() {
            AnyModel::Hqmm(h) => h,
            _ => unreachable!(),
        };
        let u = hqmm_to_ulps(&h).unwrap();
        assert!(equivalent_joint(&h, &u, 3, 1e-12).unwrap().is_equivalent());
        let (back, _) = ulps_to_hqmm(&u, &opts).unwrap();
        let r = equivalent_conditional(&h, &back, 3, 1e-9, &opts.eigen).unwrap();
        assert!(r.is_equivalent(), "{r:?}");
    }
}

#[test]
fn recovered_kraus_rank_is_choi_rank() {
    for seed in 0..10 {
        let mut spec = RandomSpec::new(ModelKind::Hqmm, 3, 1, seed);
        spec.kraus_rank = 1 + seed as usize % 3;
        let h = match random_model_with(&spec).unwrap() {
            AnyModel::Hqmm(h) => h,
            _ => unreachable!(),
        };
        let l = kraus_to_liouville(&h.kraus_by_obs()[0]);
        let k = liouville_to_kraus(&l, 1e-10).unwrap();
        assert!(kraus_to_liouville(&k).max_abs_diff(&l) < 1e-11);
        assert_eq!(k.kraus_rank(), choi_rank(&l, 1e-10).unwrap());
        assert_eq!(k.kraus_rank(), spec.kraus_rank);
    }
}

// Random two-dimensional NOOMs never reproduce the appendix model's
// conditionals; this is spot evidence only.
#[test]
fn appendix_model_is_far_from_random_nooms() {
    let target = appendix_hmm().model;
    let eigen = EigenOptions::default();
    let mut best = f64::INFINITY;
    for seed in 0..200 {
        let m = match random_model(ModelKind::Noom, 2, 2, seed).unwrap() {
            AnyModel::Noom(m) => m,
            _ => unreachable!(),
        };
        let Ok(r) = equivalent_conditional(&target, &m, 3, 1e-9, &eigen) else { continue };
        best = best.min(r.max_deviation);
    }
    assert!(best > 0.05, "closest candidate deviates by {best}");
}

#[test]
fn appendix_conditionals_use_unit_fixed_point() {
    let m = appendix_hmm().model;
    let fp = transfer_fixed_point(&m, &EigenOptions::default()).unwrap();
    assert!((fp.eigenvalue.re - 1.0).abs() < 1e-12);
    let d = conditional_distribution(&m, &[1], &fp).unwrap();
    let states = m.filter_sequence(&[1]).unwrap();
    let direct = m.predict(&states[1]).unwrap();
    for (a, b) in d.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(SequenceModel::obs_count(&m), OperatorModel::obs_count(&m));
    assert!((m.joint(&[1, 1]).unwrap().value - 0.625).abs() < 1e-15);
}
