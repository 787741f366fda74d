//! Acoustic model variants over the same input: stacking depth, the
//! convolutional front end and the streams fed in by each training mode.

use senan::acoustic_model::AmArch;
use senan::config::{ExperimentConfig, Mode};
use senan::corpus::{generate_corpus, Split};
use senan::training::{prepare_corpus, train_phone_lm, JointModel};

fn main() -> senan::Result<()> {
    let mut base = ExperimentConfig::default();
    base.corpus.num_train = 2;
    let train = generate_corpus(&base.corpus, Split::Train)?;
    let lm = train_phone_lm(&train, &base);
    let utt = &prepare_corpus(&train, &base, &lm)?[0];

    for (mode, arch) in [
        (Mode::Baseline, AmArch::Tdnnf),
        (Mode::Proposed, AmArch::Tdnnf),
        (Mode::Proposed, AmArch::CnnTdnnf),
        (Mode::Oracle, AmArch::Tdnnf),
    ] {
        let mut cfg = base.clone();
        cfg.train.mode = mode;
        cfg.am.arch = arch;
        let model = JointModel::new(&cfg, lm.clone())?;
        let logits = model.logits(utt)?;
        let (back, ahead) = model.am.receptive_field();
        let weights: usize = model.store.iter().map(|(_, p)| p.value.len()).sum();
        println!(
            "{mode:<8} {arch:<9} input {:>3} dims  logits {:?}  context -{back}/+{ahead}  {weights} weights",
            model.am.spec.d_in(),
            logits.shape()
        );
    }
    Ok(())
}
