//! Round trips and structural invariants across modules.

mod common;

use proptest::prelude::*;
use senan::checkpoint::Checkpoint;
use senan::config::{ExperimentConfig, Mode};
use senan::corpus::{generate_corpus, PhoneInventory, Split};
use senan::features::{cmn, FeatureKind, FeatureMatrix};
use senan::lfmmi::{build_denominator_graph, build_numerator_graph, Graph, PhoneLm};
use senan::numerics::{orthogonality_error, semi_orthogonal_step, OrthoScale, Tensor};
use senan::training::{JointModel, train_phone_lm};

#[test]
fn projection_converges_from_random_init() {
    common::data_suite::projection_converges_from_random_init();
}

#[test]
fn noise_round_trip_on_generated_corpus() {
    common::data_suite::noise_round_trip_on_generated_corpus();
}

#[test]
fn checkpoint_round_trip_and_modes() {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.num_train = 6;
    let train = generate_corpus(&cfg.corpus, Split::Train).unwrap();
    let lm = train_phone_lm(&train, &cfg);
    for mode in [Mode::Baseline, Mode::Proposed, Mode::Oracle] {
        cfg.train.mode = mode;
        let m = JointModel::new(&cfg, lm.clone()).unwrap();
        let ck = m.checkpoint();
        let back = Checkpoint::decode(&ck.encode()).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.params.len(), ck.params.len());
        let has_senan = back.params.iter().any(|p| p.name.starts_with("senan."));
        assert_eq!(has_senan, mode == Mode::Proposed, "{mode}");
        let m2 = JointModel::from_checkpoint(&back).unwrap();
        for ((_, a), (_, b)) in m.store.iter().zip(m2.store.iter()) {
            assert_eq!(a.value, b.value);
        }
        let mut bytes = ck.encode();
        bytes.truncate(bytes.len() - 3);
        assert!(Checkpoint::decode(&bytes).is_err());
    }
}

fn small_lm(p: usize, seqs: &[Vec<usize>]) -> PhoneLm {
    let seqs: Vec<Vec<usize>> = seqs.iter().map(|s| s.iter().map(|x| x % p).collect()).collect();
    PhoneLm::train(&seqs, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_text_round_trip(p in 1usize..5, spp in 1usize..4, seqs in prop::collection::vec(prop::collection::vec(0usize..5, 1..5), 1..4)) {
        let inv = PhoneInventory::generate(p, spp, 3);
        let lm = small_lm(p, &seqs);
        let den = build_denominator_graph(&lm, &inv).unwrap();
        prop_assert_eq!(den.num_states, p * (spp + 1) + 1);
        prop_assert_eq!(Graph::from_text(&den.to_text()).unwrap(), den.clone());
        let tr: Vec<usize> = seqs[0].iter().map(|x| x % p).collect();
        let num = build_numerator_graph(&tr, &inv, &lm).unwrap();
        prop_assert_eq!(num.num_states, tr.len() * spp + 1);
        prop_assert_eq!(Graph::from_text(&num.to_text()).unwrap(), num);
    }

    #[test]
    fn lm_rows_are_distributions(p in 1usize..6, seqs in prop::collection::vec(prop::collection::vec(0usize..6, 0..6), 0..5)) {
        let lm = small_lm(p, &seqs);
        let w = p + 1;
        for row in lm.table().chunks(w) {
            let s: f64 = row.iter().map(|l| l.exp()).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cmn_zero_means(rows in 1usize..12, cols in 1usize..6, seed in 0u64..1000) {
        let t = common::random(&[rows, cols], &mut common::rng(seed)).map(|v| 10.0 * v + 3.0);
        let f = cmn(&FeatureMatrix::new(t, FeatureKind::Noisy).unwrap());
        prop_assert!(f.mean_row().iter().all(|m| m.abs() < 1e-12));
        let g = cmn(&f);
        prop_assert!(f.data.max_abs_diff(&g.data) < 1e-12);
    }

    #[test]
    fn projection_never_increases_error_much(r in 1usize..6, extra in 0usize..8, seed in 0u64..500) {
        let m = common::random(&[r, r + extra], &mut common::rng(seed));
        let before = orthogonality_error(&m, OrthoScale::Floating).unwrap();
        let mut x = m;
        for _ in 0..12 {
            x = semi_orthogonal_step(&x, OrthoScale::Floating).unwrap();
        }
        let after = orthogonality_error(&x, OrthoScale::Floating).unwrap();
        prop_assert!(after <= before + 1e-12 || after < 1e-6, "{before} -> {after}");
    }

    #[test]
    fn config_text_round_trip(seed in 0u64..1000, epochs in 0usize..40, lr in 0.001f64..0.1, mode in 0usize..3) {
        let mut cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
        cfg.train.epochs = epochs;
        cfg.train.lr_initial = lr;
        cfg.train.mode = [Mode::Baseline, Mode::Proposed, Mode::Oracle][mode];
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn tensor_text_round_trip() {
    let t = common::random(&[3, 4], &mut common::rng(5));
    assert_eq!(Tensor::from_text(&t.to_text()).unwrap(), t);
}
