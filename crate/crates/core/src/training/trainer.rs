use std::fmt::Write as _;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::spec_augment;
use crate::numerics::{semi_orthogonal_step, Constraint, OrthoScale, Tape, Tensor};
use crate::training::losses::{joint_value, lr_at};
use crate::training::model::{JointModel, PreparedUtterance};

pub const METRICS_HEADER: &str = "epoch,step,lr,L_total,L_ce,F_mmi,L_enh,L_nse,skipped";

/// Loss sums over a set of utterances (not normalized).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossSums {
    pub ce: f64,
    pub fmmi: f64,
    pub enh: f64,
    pub nse: f64,
    pub frames: usize,
    pub skipped: usize,
}

impl LossSums {
    fn add(&mut self, o: &LossSums) {
        self.ce += o.ce;
        self.fmmi += o.fmmi;
        self.enh += o.enh;
        self.nse += o.nse;
        self.frames += o.frames;
        self.skipped += o.skipped;
    }

    /// Per-frame joint loss.
    pub fn total_per_frame(&self, w: crate::config::LossWeights) -> f64 {
        joint_value(self.ce, self.fmmi, self.enh, self.nse, w) / self.frames.max(1) as f64
    }
}

/// One row of the metrics log; losses are per frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub total: f64,
    pub ce: f64,
    pub fmmi: f64,
    pub enh: f64,
    pub nse: f64,
    pub skipped: usize,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch, self.step, self.lr, self.total, self.ce, self.fmmi, self.enh, self.nse, self.skipped
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}

/// Optimizer state: step counter, momentum buffers and the sampling RNG.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub step: usize,
    pub total_steps: usize,
    velocity: Vec<Tensor>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: &JointModel, total_steps: usize) -> Self {
        Self {
            step: 0,
            total_steps,
            velocity: model.store.iter().map(|(_, p)| Tensor::zeros(p.value.shape())).collect(),
            rng: ChaCha8Rng::seed_from_u64(model.config.seed ^ 0x5452_4149_4e),
        }
    }

    pub fn lr(&self, model: &JointModel) -> f64 {
        lr_at(self.step, self.total_steps, &model.config.train)
    }

    /// Forward and backward over a batch, then one SGD update. Losses are
    /// summed over utterances and divided by the batch frame count.
    pub fn step(&mut self, model: &mut JointModel, batch: &[&PreparedUtterance]) -> Result<LossSums> {
        let lr = self.lr(model);
        self.step_with_lr(model, batch, lr)
    }

    pub fn step_with_lr(&mut self, model: &mut JointModel, batch: &[&PreparedUtterance], lr: f64) -> Result<LossSums> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let cfg = model.config.train.clone();
        let frames: usize = batch.iter().map(|u| u.frames()).sum();
        let norm = 1.0 / frames as f64;
        model.store.zero_grad();
        let mut sums = LossSums::default();
        for utt in batch {
            let x = if cfg.specaug {
                spec_augment(&utt.x_nsy, &model.config.specaug, &mut self.rng)?
            } else {
                utt.x_nsy.clone()
            };
            let mut tape = Tape::new();
            let loss = match model.utterance_loss(&mut tape, utt, &x) {
                Ok(l) => l,
                Err(Error::NoPath) => {
                    warn!("{}: no path through the numerator or denominator graph, skipped", utt.id);
                    sums.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let scaled = tape.scale(loss.total, norm);
            tape.backward(scaled)?;
            model.store.accumulate_from(&tape);
            sums.add(&LossSums {
                ce: loss.ce,
                fmmi: loss.fmmi,
                enh: loss.enh,
                nse: loss.nse,
                frames: utt.frames(),
                skipped: 0,
            });
        }
        let values = [sums.ce, sums.fmmi, sums.enh, sums.nse];
        if values.iter().any(|v| !v.is_finite()) {
            warn!("loss components {values:?} at step {}", self.step);
            return Err(Error::NonFinite);
        }
        self.apply_update(model, lr, cfg.momentum, cfg.max_grad_norm);
        self.step += 1;
        if self.step % cfg.constraint_every == 0 {
            for p in model.store.iter_mut().filter(|p| p.constraint == Constraint::SemiOrthogonal) {
                p.value = semi_orthogonal_step(&p.value, OrthoScale::Floating)?;
            }
        }
        Ok(sums)
    }

    fn apply_update(&mut self, model: &mut JointModel, lr: f64, momentum: f64, max_norm: f64) {
        let mut scale = 1.0;
        if max_norm > 0.0 {
            let norm = model
                .store
                .iter()
                .map(|(_, p)| p.grad.data().iter().map(|g| g * g).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }
        for (p, v) in model.store.iter_mut().zip(&mut self.velocity) {
            let step = if momentum > 0.0 {
                *v = v.zip_map(&p.grad, |vel, g| momentum * vel + scale * g);
                v.clone()
            } else {
                p.grad.map(|g| scale * g)
            };
            p.value = p.value.zip_map(&step, |w, s| w - lr * s);
        }
    }

    /// Seeded shuffle into batches of `batch_size`.
    pub fn batches(&mut self, n: usize, batch_size: usize) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        order.chunks(batch_size).map(<[usize]>::to_vec).collect()
    }
}

pub fn steps_per_epoch(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size)
}

/// Result of [`run_training`].
#[derive(Clone, Debug)]
pub struct TrainingReport {
    pub rows: Vec<MetricsRow>,
    /// Per-frame joint loss of every step.
    pub step_losses: Vec<f64>,
    pub best_epoch: Option<usize>,
}

/// Epochs over seeded shuffled batches. With `out_dir`, writes
/// `metrics.csv`, `final.ckpt` and `best.ckpt` (lowest epoch loss; the
/// initialization when no epoch ran).
pub fn run_training(model: &mut JointModel, train: &[PreparedUtterance], out_dir: Option<&Path>) -> Result<TrainingReport> {
    if train.is_empty() {
        return Err(Error::InvalidConfig("no training utterances".into()));
    }
    let cfg = model.config.train.clone();
    let per_epoch = steps_per_epoch(train.len(), cfg.batch_size);
    let mut trainer = Trainer::new(model, per_epoch * cfg.epochs);
    let mut rows = Vec::with_capacity(cfg.epochs);
    let mut step_losses = Vec::new();
    let mut best = (f64::INFINITY, None, model.checkpoint());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for epoch in 1..=cfg.epochs {
        let mut epoch_sums = LossSums::default();
        let mut lr = trainer.lr(model);
        for batch in trainer.batches(train.len(), cfg.batch_size) {
            let utts: Vec<&PreparedUtterance> = batch.iter().map(|&i| &train[i]).collect();
            lr = trainer.lr(model);
            let sums = trainer.step_with_lr(model, &utts, lr)?;
            step_losses.push(sums.total_per_frame(cfg.weights));
            epoch_sums.add(&sums);
        }
        let f = epoch_sums.frames.max(1) as f64;
        let row = MetricsRow {
            epoch,
            step: trainer.step,
            lr,
            total: epoch_sums.total_per_frame(cfg.weights),
            ce: epoch_sums.ce / f,
            fmmi: epoch_sums.fmmi / f,
            enh: epoch_sums.enh / f,
            nse: epoch_sums.nse / f,
            skipped: epoch_sums.skipped,
        };
        info!(
            "epoch {epoch}: L={:.4} ce={:.4} F={:.4} enh={:.4} nse={:.4} lr={lr:.5} frames={}",
            row.total, row.ce, row.fmmi, row.enh, row.nse, epoch_sums.frames
        );
        if row.total < best.0 {
            best = (row.total, Some(epoch), model.checkpoint());
        }
        rows.push(row);
        if let Some(dir) = out_dir {
            let path = dir.join("metrics.csv");
            std::fs::write(&path, metrics_csv(&rows)).map_err(|e| Error::io(path, e))?;
        }
    }
    if let Some(dir) = out_dir {
        let path = dir.join("metrics.csv");
        std::fs::write(&path, metrics_csv(&rows)).map_err(|e| Error::io(path, e))?;
        model.checkpoint().save(&dir.join("final.ckpt"))?;
        best.2.save(&dir.join("best.ckpt"))?;
    }
    Ok(TrainingReport {
        rows,
        step_losses,
        best_epoch: best.1,
    })
}
