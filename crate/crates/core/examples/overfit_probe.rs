//! Trains the proposed model on a single utterance and reports how quickly
//! the frame-level cross-entropy collapses and whether decoding recovers
//! the transcript.

use std::path::PathBuf;

use senan::cli;
use senan::config::Mode;
use senan::corpus::{generate_corpus, Split};
use senan::training::{prepare_corpus, train_phone_lm, JointModel, Trainer};

fn main() -> senan::Result<()> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", "trend.conf"].iter().collect();
    let mut cfg = cli::load_config(Some(&path), &[], None)?;
    cfg.train.mode = Mode::Proposed;
    cfg.train.specaug = false;
    cfg.corpus.num_train = 4;
    let train = generate_corpus(&cfg.corpus, Split::Train)?;
    let lm = train_phone_lm(&train, &cfg);
    let data = prepare_corpus(&train, &cfg, &lm)?;
    let utt = &data[0];
    let mut model = JointModel::new(&cfg, lm)?;
    let mut trainer = Trainer::new(&model, 200);
    let mut prev = f64::INFINITY;
    let mut down = 0;
    for step in 0..200 {
        let s = trainer.step(&mut model, &[utt])?;
        let total = s.total_per_frame(cfg.train.weights);
        down += usize::from(total < prev);
        prev = total;
        if step % 25 == 0 || step == 199 {
            println!("step {step:>3}  ce/frame {:.4}  joint/frame {total:.3}", s.ce / s.frames as f64);
        }
    }
    let path = model.decode(utt)?;
    println!("loss decreased in {} of 199 steps", down - 1);
    println!("reference {:?}\ndecoded   {:?}", utt.transcript, path.phones);
    Ok(())
}
