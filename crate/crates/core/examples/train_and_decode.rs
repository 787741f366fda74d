//! End-to-end run on a small corpus: write it to disk, train each mode,
//! decode the test split and score it.
//!
//! Usage: cargo run --release --example train_and_decode [OUT_DIR]

use std::path::PathBuf;

use senan::cli;
use senan::config::{ExperimentConfig, Mode};
use senan::corpus::Split;

fn main() -> senan::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("senan-demo"));
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.num_train = 40;
    cfg.corpus.num_test = 10;
    cfg.train.epochs = 4;

    let corpus = out.join("corpus");
    for s in cli::cmd_gen_corpus(&cfg, &corpus)? {
        println!("{}", s.to_line());
    }
    for mode in [Mode::Baseline, Mode::Proposed, Mode::Oracle] {
        let run = out.join(mode.to_string());
        let report = cli::cmd_train(&cfg, &corpus, &run, mode)?;
        let last = report.rows.last().expect("at least one epoch");
        let hyp = cli::cmd_decode(&run.join("final.ckpt"), &corpus, Split::Test, &run)?;
        let score = cli::cmd_score(&hyp, &corpus, Split::Test)?;
        println!("{mode:<8} final loss {:.3}  test WER {:.2}", last.total, score.overall.wer());
    }
    println!("{}", cli::cmd_report(&out)?);
    Ok(())
}
