//! Saving a model to a checkpoint and restoring it bit for bit.

use senan::checkpoint::Checkpoint;
use senan::config::ExperimentConfig;
use senan::corpus::{generate_corpus, Split};
use senan::training::{train_phone_lm, JointModel};

fn main() -> senan::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.num_train = 4;
    let train = generate_corpus(&cfg.corpus, Split::Train)?;
    let model = JointModel::new(&cfg, train_phone_lm(&train, &cfg))?;
    let dir = std::env::temp_dir().join("senan-checkpoint-demo");
    std::fs::create_dir_all(&dir).map_err(|e| senan::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("model.ckpt");
    model.checkpoint().save(&path)?;
    let restored = JointModel::from_checkpoint(&Checkpoint::load(&path)?)?;
    let same = model.store.iter().zip(restored.store.iter()).all(|((_, a), (_, b))| a.value == b.value);
    println!("{} tensors written to {}; identical after reload: {same}", model.store.names().count(), path.display());
    Ok(())
}
