use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use senan::cli;
use senan::config::Mode;
use senan::corpus::Split;

/// Noise-robust phone recognition experiments on a synthetic corpus.
#[derive(Parser, Debug)]
#[command(name = "senan", version)]
struct Args {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Extra `key=value` config overrides, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the train and test splits into the output directory.
    GenCorpus,
    /// Train one model; writes metrics.csv and checkpoints.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "proposed")]
        mode: Mode,
    },
    /// Viterbi-decode a split with a checkpoint.
    Decode {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Score a hypothesis file against a split.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Run the ablation ladder and the noise-aggregator sweep.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Summarize runs, scores and ablations found in the output directory.
    Report,
}

fn run(args: Args) -> senan::Result<()> {
    let cfg = || cli::load_config(args.config.as_deref(), &args.set, args.seed);
    match &args.cmd {
        Command::GenCorpus => {
            for s in cli::cmd_gen_corpus(&cfg()?, &args.out)? {
                println!("{}", s.to_line());
            }
        }
        Command::Train { corpus, mode } => {
            let report = cli::cmd_train(&cfg()?, corpus, &args.out, *mode)?;
            if let Some(last) = report.rows.last() {
                println!("{}", senan::training::METRICS_HEADER);
                println!("{}", last.to_csv());
            }
            println!("checkpoints in {}", args.out.display());
        }
        Command::Decode { checkpoint, corpus, split } => {
            let path = cli::cmd_decode(checkpoint, corpus, *split, &args.out)?;
            println!("{}", path.display());
        }
        Command::Score { hyp, corpus, split } => {
            let report = cli::cmd_score(hyp, corpus, *split)?;
            let text = report.to_text();
            print!("{text}");
            let path = args.out.join(format!("score_{}.txt", split.as_str()));
            std::fs::create_dir_all(&args.out).map_err(|e| senan::Error::Io { path: args.out.clone(), source: e })?;
            std::fs::write(&path, text).map_err(|e| senan::Error::Io { path, source: e })?;
        }
        Command::Ablate { corpus } => {
            let out = cli::cmd_ablate(&cfg()?, corpus, &args.out)?;
            print!("{}", cli::ablation_csv(&out.ladder));
            print!("{}", cli::ablation_csv(&out.nse));
        }
        Command::Report => print!("{}", cli::cmd_report(&args.out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
