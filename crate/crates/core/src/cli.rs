//! The experiment pipeline behind the `senan` command: corpus generation,
//! training, decoding, scoring, ablations and a summary report.
//!
//! Run directories hold `config.txt`, `metrics.csv`, `final.ckpt` and
//! `best.ckpt`. Decoding writes `hyp_<split>.txt` (`id  p1 p2 …`) and a
//! `hyp_<split>.states` sidecar with the per-frame Viterbi states.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::aggregation::AggregatorKind;
use crate::acoustic_model::AmArch;
use crate::checkpoint::Checkpoint;
use crate::config::{ExperimentConfig, Mode};
use crate::corpus::io::{read_corpus, write_corpus};
use crate::corpus::{self, generate_corpus, triple_with_perturbations, Corpus, Split};
use crate::error::{Error, Result};
use crate::scoring::{self, format_sequences, parse_sequences, Hypothesis, Reference, ScoreReport};
use crate::training::{prepare_corpus, run_training, train_phone_lm, JointModel, PreparedUtterance, TrainingReport};

/// Config file (if any), then `key=value` overrides, then the seed flag.
pub fn load_config(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override {kv:?} is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitSummary {
    pub split: Split,
    pub utterances: usize,
    pub speakers: usize,
    pub snr_min: f64,
    pub snr_mean: f64,
    pub snr_max: f64,
    pub manifest: PathBuf,
}

impl SplitSummary {
    fn of(c: &Corpus, manifest: PathBuf) -> Self {
        let snrs: Vec<f64> = c.utterances.iter().map(|u| u.snr_db).collect();
        let n = snrs.len().max(1) as f64;
        Self {
            split: c.split,
            utterances: c.len(),
            speakers: c.speakers().len(),
            snr_min: snrs.iter().copied().fold(f64::INFINITY, f64::min),
            snr_mean: snrs.iter().sum::<f64>() / n,
            snr_max: snrs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            manifest,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}: {} utterances, {} speakers, SNR min {:.2} mean {:.2} max {:.2} dB -> {}",
            self.split.as_str(),
            self.utterances,
            self.speakers,
            self.snr_min,
            self.snr_mean,
            self.snr_max,
            self.manifest.display()
        )
    }
}

/// Generates both splits under `out` and records the config next to them.
pub fn cmd_gen_corpus(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SplitSummary>> {
    cfg.validate()?;
    let mut summaries = Vec::new();
    for split in [Split::Train, Split::Test] {
        let c = generate_corpus(&cfg.corpus, split)?;
        let manifest = write_corpus(out, &c)?;
        summaries.push(SplitSummary::of(&c, manifest));
    }
    write_file(&out.join("config.txt"), cfg.to_text())?;
    Ok(summaries)
}

pub fn load_split(cfg: &ExperimentConfig, corpus_dir: &Path, split: Split) -> Result<Corpus> {
    read_corpus(corpus_dir, split, cfg.corpus.hop_len())
}

/// Training split as used for training: perturbed copies added when
/// `corpus.augment` is set.
pub fn training_corpus(cfg: &ExperimentConfig, train: &Corpus) -> Result<Corpus> {
    if cfg.augment {
        triple_with_perturbations(train, &cfg.corpus)
    } else {
        Ok(train.clone())
    }
}

/// Trains a fresh model on an in-memory split.
pub fn train_model(cfg: &ExperimentConfig, train: &Corpus, out: Option<&Path>) -> Result<(JointModel, TrainingReport)> {
    let lm = train_phone_lm(train, cfg);
    let data = prepare_corpus(&training_corpus(cfg, train)?, cfg, &lm)?;
    let mut model = JointModel::new(cfg, lm)?;
    if let Some(dir) = out {
        write_file(&dir.join("config.txt"), cfg.to_text())?;
    }
    let report = run_training(&mut model, &data, out)?;
    Ok((model, report))
}

pub fn cmd_train(cfg: &ExperimentConfig, corpus_dir: &Path, out: &Path, mode: Mode) -> Result<TrainingReport> {
    let mut cfg = cfg.clone();
    cfg.train.mode = mode;
    cfg.validate()?;
    let train = load_split(&cfg, corpus_dir, Split::Train)?;
    let (_, report) = train_model(&cfg, &train, Some(out))?;
    info!("trained {} epochs in {mode} mode, best epoch {:?}", report.rows.len(), report.best_epoch);
    Ok(report)
}

/// Viterbi output of every utterance; a graph without a path yields an
/// empty hypothesis.
pub fn decode_all(model: &JointModel, data: &[PreparedUtterance]) -> Result<Vec<Hypothesis>> {
    data.iter()
        .map(|u| match model.decode(u) {
            Ok(p) => Ok(Hypothesis {
                id: u.id.clone(),
                phones: p.phones,
                states: Some(p.labels),
            }),
            Err(Error::NoPath) => {
                warn!("{}: no decoding path, empty hypothesis", u.id);
                Ok(Hypothesis {
                    id: u.id.clone(),
                    phones: Vec::new(),
                    states: None,
                })
            }
            Err(e) => Err(e),
        })
        .collect()
}

pub fn hypothesis_path(out: &Path, split: Split) -> PathBuf {
    out.join(format!("hyp_{}.txt", split.as_str()))
}

fn states_path(hyp: &Path) -> PathBuf {
    hyp.with_extension("states")
}

pub fn write_hypotheses(path: &Path, hyps: &[Hypothesis]) -> Result<()> {
    write_file(path, format_sequences(hyps.iter().map(|h| (h.id.as_str(), h.phones.as_slice()))))?;
    let states = hyps
        .iter()
        .filter_map(|h| h.states.as_ref().map(|s| (h.id.as_str(), s.as_slice())));
    write_file(&states_path(path), format_sequences(states))
}

/// Reads a hypothesis file and, when present, its states sidecar.
pub fn read_hypotheses(path: &Path) -> Result<Vec<Hypothesis>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sidecar = states_path(path);
    let states: Vec<(String, Vec<usize>)> = match fs::read_to_string(&sidecar) {
        Ok(s) => parse_sequences(&s)?,
        Err(_) => Vec::new(),
    };
    Ok(parse_sequences(&text)?
        .into_iter()
        .map(|(id, phones)| {
            let states = states.iter().find(|(i, _)| *i == id).map(|(_, s)| s.clone());
            Hypothesis { id, phones, states }
        })
        .collect())
}

pub fn cmd_decode(checkpoint: &Path, corpus_dir: &Path, split: Split, out: &Path) -> Result<PathBuf> {
    let ck = Checkpoint::load(checkpoint)?;
    let model = JointModel::from_checkpoint(&ck)?;
    let c = load_split(&model.config, corpus_dir, split)?;
    let data = prepare_corpus(&c, &model.config, &model.lm)?;
    let hyps = decode_all(&model, &data)?;
    let path = hypothesis_path(out, split);
    write_hypotheses(&path, &hyps)?;
    Ok(path)
}

pub fn references(c: &Corpus) -> Vec<Reference> {
    c.utterances
        .iter()
        .map(|u| Reference {
            id: u.id.clone(),
            phones: u.transcript.clone(),
            alignment: u.alignment.clone(),
        })
        .collect()
}

/// References come from the split's manifest and alignment files.
pub fn cmd_score(hyp: &Path, corpus_dir: &Path, split: Split) -> Result<ScoreReport> {
    let manifest = corpus::io::manifest_path(corpus_dir, split);
    let base = manifest.parent().unwrap_or(Path::new("."));
    let refs = corpus::io::read_manifest(&manifest)?
        .into_iter()
        .map(|e| {
            Ok(Reference {
                alignment: corpus::io::read_alignment(&base.join(&e.alignment))?,
                id: e.id,
                phones: e.transcript,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scoring::score(&refs, &read_hypotheses(hyp)?)
}

/// Trains on `train`, decodes `test` and scores it.
pub fn run_experiment(cfg: &ExperimentConfig, train: &Corpus, test: &Corpus) -> Result<(ScoreReport, TrainingReport)> {
    let (model, report) = train_model(cfg, train, None)?;
    let data = prepare_corpus(test, cfg, &model.lm)?;
    let hyps = decode_all(&model, &data)?;
    Ok((scoring::score(&references(test), &hyps)?, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub wer: f64,
    /// Percent change relative to the first row.
    pub rel_change: f64,
}

/// The cumulative ladder: baseline, enhanced stream only, aggregated
/// enhanced stream, plus the aggregated noise stream, plus SpecAug, plus
/// the convolutional front end.
pub fn ladder_variants(cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let mut v = Vec::new();
    let mut c = cfg.clone();
    c.train.mode = Mode::Baseline;
    c.train.specaug = false;
    c.am.arch = AmArch::Tdnnf;
    v.push(("baseline".to_string(), c.clone()));
    c.train.mode = Mode::Proposed;
    c.senan.noise_head = false;
    c.agg_enh = AggregatorKind::Cur;
    v.push(("+enh".to_string(), c.clone()));
    c.agg_enh = cfg.agg_enh;
    v.push((format!("+enh({})", c.agg_enh), c.clone()));
    c.senan.noise_head = true;
    v.push((format!("+enh({})&nse({})", c.agg_enh, c.agg_nse), c.clone()));
    c.train.specaug = true;
    v.push(("+specaug".to_string(), c.clone()));
    c.am.arch = AmArch::CnnTdnnf;
    v.push(("+cnn".to_string(), c));
    v
}

/// Proposed mode with each of the four noise-stream aggregators.
pub fn nse_variants(cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    [AggregatorKind::Cur, AggregatorKind::Cont, AggregatorKind::Stat, AggregatorKind::Sat]
        .into_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.train.mode = Mode::Proposed;
            c.senan.noise_head = true;
            c.agg_nse = k;
            (format!("nse={k}"), c)
        })
        .collect()
}

pub fn ablation_rows(results: &[(String, f64)]) -> Vec<AblationRow> {
    let first = results.first().map_or(0.0, |r| r.1);
    results
        .iter()
        .map(|(variant, wer)| AblationRow {
            variant: variant.clone(),
            wer: *wer,
            rel_change: if first == 0.0 { 0.0 } else { 100.0 * (wer - first) / first },
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("variant,wer,rel_change\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.4},{:.4}", r.variant, r.wer, r.rel_change);
    }
    s
}

pub fn parse_ablation_csv(text: &str) -> Result<Vec<AblationRow>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number in {l:?}")));
            match f.as_slice() {
                [v, w, r] => Ok(AblationRow {
                    variant: v.to_string(),
                    wer: num(w)?,
                    rel_change: num(r)?,
                }),
                _ => Err(Error::Parse(format!("ablation line {l:?}"))),
            }
        })
        .collect()
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bar chart of WER per variant.
pub fn bar_chart_svg(title: &str, rows: &[AblationRow]) -> String {
    let (bar, gap, left, top, height) = (60.0, 20.0, 50.0, 40.0, 240.0);
    let width = left + rows.len() as f64 * (bar + gap) + gap;
    let max = rows.iter().map(|r| r.wer).fold(0.0, f64::max).max(1e-9);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{}" font-family="sans-serif" font-size="11">"#,
        top + height + 70.0
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, xml_escape(title));
    let base = top + height;
    let _ = writeln!(s, r#"<line x1="{left}" y1="{base}" x2="{width}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{base}" stroke="black"/>"#);
    for (i, r) in rows.iter().enumerate() {
        let x = left + gap + i as f64 * (bar + gap);
        let h = height * r.wer / max;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{:.2}" width="{bar}" height="{h:.2}" fill="steelblue"/>"#,
            base - h
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="middle">{:.2}</text>"#,
            x + bar / 2.0,
            base - h - 4.0,
            r.wer
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" transform="rotate(-35 {:.1} {:.1})">{}</text>"#,
            x + bar / 2.0,
            base + 14.0,
            x + bar / 2.0,
            base + 14.0,
            xml_escape(&r.variant)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationOutput {
    pub ladder: Vec<AblationRow>,
    pub nse: Vec<AblationRow>,
}

/// Runs both sweeps with the shared seed and writes `ablation_ladder.csv`,
/// `ablation_nse.csv` and an SVG chart for each.
pub fn cmd_ablate(cfg: &ExperimentConfig, corpus_dir: &Path, out: &Path) -> Result<AblationOutput> {
    let train = load_split(cfg, corpus_dir, Split::Train)?;
    let test = load_split(cfg, corpus_dir, Split::Test)?;
    let run = |variants: Vec<(String, ExperimentConfig)>| -> Result<Vec<AblationRow>> {
        let mut results = Vec::new();
        for (name, c) in variants {
            let (score, _) = run_experiment(&c, &train, &test)?;
            info!("{name}: WER {:.2}", score.overall.wer());
            results.push((name, score.overall.wer()));
        }
        Ok(ablation_rows(&results))
    };
    let ladder = run(ladder_variants(cfg))?;
    let nse = run(nse_variants(cfg))?;
    write_file(&out.join("ablation_ladder.csv"), ablation_csv(&ladder))?;
    write_file(&out.join("ablation_nse.csv"), ablation_csv(&nse))?;
    write_file(&out.join("ablation_ladder.svg"), bar_chart_svg("Ablation ladder: test WER (%)", &ladder))?;
    write_file(&out.join("ablation_nse.svg"), bar_chart_svg("Noise-stream aggregation: test WER (%)", &nse))?;
    Ok(AblationOutput { ladder, nse })
}

/// Line chart of `L_total` per epoch for each named run.
pub fn loss_curve_svg(runs: &[(String, Vec<f64>)]) -> String {
    let (w, h, left, top) = (480.0, 260.0, 60.0, 30.0);
    let all: Vec<f64> = runs.iter().flat_map(|r| r.1.iter().copied()).filter(|v| v.is_finite()).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let colors = ["steelblue", "darkorange", "seagreen", "crimson", "purple", "gray"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        left + w + 160.0,
        top + h + 40.0
    );
    let _ = writeln!(s, r#"<text x="{left}" y="18" font-size="14">Joint loss per frame by epoch</text>"#);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#, left - 4.0, top + 10.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{lo:.3}</text>"#, left - 4.0, top + h);
    for (i, (name, ys)) in runs.iter().enumerate() {
        let color = colors[i % colors.len()];
        let n = ys.len().max(2) - 1;
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(j, y)| format!("{:.2},{:.2}", left + w * j as f64 / n as f64, top + h * (hi - y) / span))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, pts.join(" "));
        let ly = top + 14.0 * (i + 1) as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#,
            left + w + 10.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn read_metrics_totals(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(3)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("metrics line {l:?}")))
        })
        .collect()
}

/// Summarizes everything found under `dir`: training runs (subdirectories
/// with `metrics.csv`), score files and ablation CSVs. Writes
/// `report.md` and `loss_curves.svg`, and returns the markdown.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let mut md = String::from("# Experiment report\n\n");
    let mut runs = Vec::new();
    for p in entries.iter().filter(|p| p.join("metrics.csv").is_file()) {
        let name = p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        runs.push((name, read_metrics_totals(&p.join("metrics.csv"))?));
    }
    if !runs.is_empty() {
        md.push_str("## Training runs\n\n| run | epochs | first L | last L |\n|---|---|---|---|\n");
        for (name, ys) in &runs {
            let first = ys.first().copied().unwrap_or(f64::NAN);
            let last = ys.last().copied().unwrap_or(f64::NAN);
            let _ = writeln!(md, "| {name} | {} | {first:.4} | {last:.4} |", ys.len());
        }
        md.push_str("\n![loss curves](loss_curves.svg)\n\n");
        write_file(&dir.join("loss_curves.svg"), loss_curve_svg(&runs))?;
    }
    let mut scores: Vec<PathBuf> = Vec::new();
    for p in &entries {
        let candidates = if p.is_dir() {
            fs::read_dir(p).map_err(|e| Error::io(p, e))?.filter_map(|e| e.ok().map(|e| e.path())).collect()
        } else {
            vec![p.clone()]
        };
        scores.extend(candidates.into_iter().filter(|c| {
            c.file_name().is_some_and(|n| n.to_string_lossy().starts_with("score_")) && c.extension().is_some_and(|e| e == "txt")
        }));
    }
    scores.sort();
    if !scores.is_empty() {
        md.push_str("## Scores\n\n");
        for p in &scores {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let rel = p.strip_prefix(dir).unwrap_or(p);
            let _ = write!(md, "### {}\n\n```\n{text}```\n\n", rel.display());
        }
    }
    for (file, title) in [("ablation_ladder.csv", "Ablation ladder"), ("ablation_nse.csv", "Noise-stream aggregation")] {
        let p = dir.join(file);
        if !p.is_file() {
            continue;
        }
        let rows = parse_ablation_csv(&fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?)?;
        let _ = write!(md, "## {title}\n\n| variant | WER | rel. change (%) |\n|---|---|---|\n");
        for r in &rows {
            let _ = writeln!(md, "| {} | {:.2} | {:+.2} |", r.variant, r.wer, r.rel_change);
        }
        let _ = writeln!(md, "\n![{title}]({})\n", file.replace(".csv", ".svg"));
    }
    write_file(&dir.join("report.md"), &md)?;
    Ok(md)
}
