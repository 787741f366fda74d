use crate::config::{LossWeights, TrainConfig};
use crate::error::{Error, Result};
use crate::numerics::{Tape, Value};

/// Frame-summed cross-entropy against per-frame state labels.
pub fn ce_loss(tape: &mut Tape, logits: Value, alignment: &[usize]) -> Result<Value> {
    let (t, k) = (tape.value(logits).rows(), tape.value(logits).cols());
    if alignment.len() != t {
        return Err(Error::FrameCountMismatch(format!(
            "{t} logit frames vs {} labels",
            alignment.len()
        )));
    }
    if let Some(&label) = alignment.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, num_states: k });
    }
    let logp = tape.log_softmax(logits)?;
    let index = alignment.iter().enumerate().map(|(r, &l)| r * k + l).collect();
    let picked = tape.gather(logp, index, vec![t])?;
    let total = tape.sum(picked);
    Ok(tape.scale(total, -1.0))
}

/// `α·ce − fmmi + β·(l_enh + l_nse)`.
pub fn joint_loss(tape: &mut Tape, ce: Value, fmmi: Value, l_enh: Value, l_nse: Value, w: LossWeights) -> Result<Value> {
    let a = tape.scale(ce, w.alpha);
    let asr = tape.sub(a, fmmi)?;
    let rec = tape.add(l_enh, l_nse)?;
    let rec = tape.scale(rec, w.beta);
    tape.add(asr, rec)
}

/// The same combination on plain numbers, used for logging.
pub fn joint_value(ce: f64, fmmi: f64, l_enh: f64, l_nse: f64, w: LossWeights) -> f64 {
    w.alpha * ce - fmmi + w.beta * (l_enh + l_nse)
}

/// Exponential decay from `lr_initial` at step 0 to `lr_final` at `total`.
pub fn lr_at(step: usize, total: usize, cfg: &TrainConfig) -> f64 {
    if total == 0 {
        return cfg.lr_initial;
    }
    let frac = step.min(total) as f64 / total as f64;
    cfg.lr_initial * (cfg.lr_final / cfg.lr_initial).powf(frac)
}
