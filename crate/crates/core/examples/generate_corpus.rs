//! Synthetic noisy corpus: generation, noise recovery and the perturbed
//! training copies.

use senan::corpus::{derive_noise, generate_corpus, snr_db, triple_with_perturbations, CorpusConfig, Split};

fn main() -> senan::Result<()> {
    let cfg = CorpusConfig { num_train: 8, num_test: 2, snr_min_db: 0.0, snr_max_db: 10.0, ..CorpusConfig::default() };
    let train = generate_corpus(&cfg, Split::Train)?;
    for u in &train.utterances {
        let (gain, noise) = derive_noise(&u.noisy, &u.clean)?;
        println!(
            "{:<22} speaker {:<4} {:>6} samples  snr {:>5.2} dB (re-measured {:>5.2}, gain {gain:.3})  phones {:?}",
            u.id,
            u.speaker,
            u.noisy.samples.len(),
            u.snr_db,
            snr_db(&u.clean, &noise),
            u.transcript
        );
    }
    let tripled = triple_with_perturbations(&train, &cfg)?;
    println!("{} utterances after perturbation, e.g. {}", tripled.len(), tripled.utterances[train.len()].id);
    Ok(())
}
