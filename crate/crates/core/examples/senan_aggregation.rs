//! Decomposing noisy frames into enhanced-speech and noise estimates, then
//! summarising each stream with the four aggregation functions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use senan::aggregation::{Aggregator, AggregatorKind};
use senan::config::ExperimentConfig;
use senan::corpus::{generate_corpus, Split};
use senan::numerics::{ParamStore, Tape};
use senan::senan::{mse_loss, SenanModel};
use senan::training::{prepare_corpus, train_phone_lm};

fn main() -> senan::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.num_train = 2;
    let train = generate_corpus(&cfg.corpus, Split::Train)?;
    let lm = train_phone_lm(&train, &cfg);
    let utt = &prepare_corpus(&train, &cfg, &lm)?[0];

    let mut store = ParamStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = SenanModel::new(&cfg.senan, utt.x_nsy.dims(), utt.clean.dims(), &mut store, &mut rng)?;
    let mut tape = Tape::new();
    let x = tape.constant(utt.x_nsy.data.clone());
    let out = net.forward(&mut tape, &store, x)?;
    let clean = tape.constant(utt.clean.data.clone());
    let l_enh = mse_loss(&mut tape, out.y_enh, clean)?;
    println!(
        "{}: noisy {:?} -> enhanced {:?}, noise head present: {}, untrained enhancement loss {:.2}",
        utt.id,
        utt.x_nsy.data.shape(),
        tape.shape(out.y_enh),
        out.y_nse.is_some(),
        tape.scalar(l_enh)
    );

    for kind in AggregatorKind::ALL {
        let agg = Aggregator::new(kind, utt.clean.dims(), &format!("agg.{kind}"), &mut store, &mut rng)?;
        let y = agg.forward(&mut tape, &store, out.y_enh)?;
        println!("{kind:>4}: output {:?}", tape.shape(y));
    }
    println!("{} parameters registered", store.names().count());
    Ok(())
}
