//! MFCC extraction, mean normalisation and SpecAug masking for one
//! generated utterance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use senan::corpus::{generate_corpus, CorpusConfig, Split};
use senan::features::{cmn, mfcc, spec_augment, FeatureConfig, SpecAugConfig};

fn main() -> senan::Result<()> {
    let corpus = generate_corpus(&CorpusConfig { num_train: 1, num_test: 1, ..CorpusConfig::default() }, Split::Train)?;
    let u = &corpus.utterances[0];
    let fc = FeatureConfig::default();
    let raw = mfcc(&u.noisy, &fc)?;
    let norm = cmn(&raw);
    println!("{}: {} frames x {} coefficients", u.id, raw.frames(), raw.dims());
    println!("column means before cmn: {:.3?}", &raw.mean_row()[..4]);
    let after: Vec<String> = norm.mean_row()[..4].iter().map(|m| format!("{m:.1e}")).collect();
    println!("column means after cmn:  [{}]", after.join(", "));

    let masked = spec_augment(&norm, &SpecAugConfig::default(), &mut ChaCha8Rng::seed_from_u64(1))?;
    let changed = norm.data.data().iter().zip(masked.data.data()).filter(|(a, b)| a != b).count();
    println!("specaug changed {changed} of {} entries", norm.data.len());
    Ok(())
}
