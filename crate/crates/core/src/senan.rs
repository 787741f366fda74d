//! The speech-enhanced and noise-aware network: a multi-task autoencoder
//! with a shared five-layer trunk and two linear heads, one regressing clean
//! MFCCs and one regressing the MFCCs of the noise.

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::nn::Linear;
use crate::numerics::{ParamStore, Tape, Value};

pub const NUM_HIDDEN: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct SenanConfig {
    pub h_first: usize,
    pub h_last: usize,
    /// Build and train the noise head. Without it the network is a plain
    /// denoising autoencoder.
    pub noise_head: bool,
}

impl Default for SenanConfig {
    fn default() -> Self {
        Self {
            h_first: 64,
            h_last: 128,
            noise_head: true,
        }
    }
}

/// Sizes growing linearly from `h_first` to `h_last` over the five layers.
pub fn hidden_sizes(h_first: usize, h_last: usize) -> [usize; NUM_HIDDEN] {
    let step = (h_last as f64 - h_first as f64) / (NUM_HIDDEN - 1) as f64;
    std::array::from_fn(|i| (h_first as f64 + i as f64 * step).round() as usize)
}

#[derive(Clone, Debug)]
pub struct SenanModel {
    pub trunk: Vec<Linear>,
    pub head_enh: Linear,
    pub head_nse: Option<Linear>,
    pub input_dim: usize,
    pub output_dim: usize,
}

/// Tape handles of the two SENAN outputs.
#[derive(Clone, Copy, Debug)]
pub struct SenanOutput {
    pub y_enh: Value,
    pub y_nse: Option<Value>,
}

impl SenanModel {
    pub fn new<R: Rng + ?Sized>(
        cfg: &SenanConfig,
        input_dim: usize,
        output_dim: usize,
        store: &mut ParamStore,
        rng: &mut R,
    ) -> Result<Self> {
        if cfg.h_first == 0 || cfg.h_last < cfg.h_first {
            return Err(Error::InvalidConfig(
                "senan hidden sizes must be positive and nondecreasing".into(),
            ));
        }
        let mut trunk = Vec::with_capacity(NUM_HIDDEN);
        let mut d = input_dim;
        for (i, h) in hidden_sizes(cfg.h_first, cfg.h_last).into_iter().enumerate() {
            trunk.push(Linear::new(store, &format!("senan.trunk{i}"), d, h, true, rng)?);
            d = h;
        }
        let head_enh = Linear::new(store, "senan.head_enh", d, output_dim, true, rng)?;
        let head_nse = if cfg.noise_head {
            Some(Linear::new(store, "senan.head_nse", d, output_dim, true, rng)?)
        } else {
            None
        };
        Ok(Self {
            trunk,
            head_enh,
            head_nse,
            input_dim,
            output_dim,
        })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x_nsy: Value) -> Result<SenanOutput> {
        let d = tape.value(x_nsy).cols();
        if d != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "senan expects {} input dims, got {d}",
                self.input_dim
            )));
        }
        let mut h = x_nsy;
        for layer in &self.trunk {
            let a = layer.forward(tape, store, h)?;
            h = tape.relu(a);
        }
        let y_enh = self.head_enh.forward(tape, store, h)?;
        let y_nse = match &self.head_nse {
            Some(head) => Some(head.forward(tape, store, h)?),
            None => None,
        };
        Ok(SenanOutput { y_enh, y_nse })
    }

    /// Inference-only decomposition of a noisy feature matrix.
    pub fn decompose(&self, store: &ParamStore, x_nsy: &FeatureMatrix) -> Result<(FeatureMatrix, Option<FeatureMatrix>)> {
        let mut tape = Tape::new();
        let x = tape.constant(x_nsy.data.clone());
        let out = self.forward(&mut tape, store, x)?;
        let enh = FeatureMatrix::new(tape.value(out.y_enh).clone(), FeatureKind::Enhanced)?;
        let nse = match out.y_nse {
            Some(v) => Some(FeatureMatrix::new(tape.value(v).clone(), FeatureKind::NoiseAware)?),
            None => None,
        };
        Ok((enh, nse))
    }
}

/// Sum over frames of squared Euclidean distance (no averaging).
pub fn mse_loss(tape: &mut Tape, y: Value, target: Value) -> Result<Value> {
    let d = tape.sub(y, target)?;
    let sq = tape.mul(d, d)?;
    Ok(tape.sum(sq))
}
