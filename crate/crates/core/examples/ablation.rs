//! The cumulative component ladder and the noise-aggregator comparison on
//! a tiny corpus, written as CSV tables and bar charts.
//!
//! Usage: cargo run --release --example ablation [OUT_DIR]

use std::path::PathBuf;

use senan::cli;
use senan::config::ExperimentConfig;

fn main() -> senan::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("senan-ablation"));
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.num_train = 20;
    cfg.corpus.num_test = 6;
    cfg.train.epochs = 3;
    let corpus = out.join("corpus");
    cli::cmd_gen_corpus(&cfg, &corpus)?;
    let res = cli::cmd_ablate(&cfg, &corpus, &out)?;
    for (title, rows) in [("ladder", &res.ladder), ("noise aggregator", &res.nse)] {
        println!("{title}");
        for r in rows {
            println!("  {:<22} WER {:>6.2}  {:+.1}%", r.variant, r.wer, r.rel_change);
        }
    }
    println!("tables and charts in {}", out.display());
    Ok(())
}
