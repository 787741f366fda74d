//! Semi-orthogonal projection from random starts and the noise
//! derivation round trip on generated corpora.

use senan::corpus::{derive_noise, generate_corpus, snr_db, triple_with_perturbations, CorpusConfig, Split};
use senan::numerics::{orthogonality_error, semi_orthogonal_step, OrthoScale};

pub fn projection_converges_from_random_init() {
    for r in [2usize, 8, 16] {
        let c = 4 * r;
        let mut m = super::random(&[r, c], &mut super::rng(r as u64));
        for _ in 0..12 {
            m = semi_orthogonal_step(&m, OrthoScale::Floating).unwrap();
        }
        let err = orthogonality_error(&m, OrthoScale::Floating).unwrap();
        assert!(err < 1e-3, "{r}x{c}: {err}");
    }
}

pub fn noise_round_trip_on_generated_corpus() {
    let cfg = CorpusConfig {
        num_train: 40,
        num_test: 10,
        snr_min_db: 0.0,
        snr_max_db: 10.0,
        ..CorpusConfig::default()
    };
    let train = generate_corpus(&cfg, Split::Train).unwrap();
    let test = generate_corpus(&cfg, Split::Test).unwrap();
    for u in train.utterances.iter().chain(&test.utterances) {
        let (gain, noise) = derive_noise(&u.noisy, &u.clean).unwrap();
        assert!((gain - 1.0).abs() < 1e-9, "{}: gain {gain}", u.id);
        let diff = noise.samples.iter().zip(&u.noise.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9, "{}: noise differs by {diff}", u.id);
        let snr = snr_db(&u.clean, &noise);
        assert!((snr - u.snr_db).abs() < 0.01, "{}: {snr} vs {}", u.id, u.snr_db);
    }
    for u in &triple_with_perturbations(&train, &cfg).unwrap().utterances {
        let (_, noise) = derive_noise(&u.noisy, &u.clean).unwrap();
        assert!((snr_db(&u.clean, &noise) - u.snr_db).abs() < 0.01, "{}", u.id);
    }
}

