//! Front-end features: framing, MFCC, mean normalization, speaker vectors,
//! SpecAug masking and the binary feature archive.

pub mod archive;
pub mod mfcc;
pub mod specaug;
pub mod speaker;

pub use mfcc::{frame_signal, mfcc, MfccExtractor};
pub use specaug::{spec_augment, SpecAugConfig};
pub use speaker::SpeakerTable;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Noisy,
    Clean,
    Noise,
    Enhanced,
    NoiseAware,
    Input,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 6] = [
        FeatureKind::Noisy,
        FeatureKind::Clean,
        FeatureKind::Noise,
        FeatureKind::Enhanced,
        FeatureKind::NoiseAware,
        FeatureKind::Input,
    ];

    pub fn code(self) -> i32 {
        Self::ALL.iter().position(|&k| k == self).unwrap_or(0) as i32
    }

    pub fn from_code(code: i32) -> Result<Self> {
        usize::try_from(code)
            .ok()
            .and_then(|i| Self::ALL.get(i).copied())
            .ok_or_else(|| Error::Parse(format!("unknown feature kind code {code}")))
    }
}

/// `frames × dims` feature stream.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub data: Tensor,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(data: Tensor, kind: FeatureKind) -> Result<Self> {
        if data.shape().len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "feature matrix must be 2-D, got {:?}",
                data.shape()
            )));
        }
        Ok(Self { data, kind })
    }

    pub fn frames(&self) -> usize {
        self.data.rows()
    }

    pub fn dims(&self) -> usize {
        self.data.cols()
    }

    pub fn with_kind(mut self, kind: FeatureKind) -> Self {
        self.kind = kind;
        self
    }

    /// Per-column mean over frames.
    pub fn mean_row(&self) -> Vec<f64> {
        let (t, d) = (self.frames(), self.dims());
        let mut m = vec![0.0; d];
        for r in 0..t {
            for (acc, v) in m.iter_mut().zip(self.data.row(r)) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= t as f64);
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub n_mels: usize,
    pub n_ceps: usize,
    pub spk_dim: usize,
    pub low_hz: f64,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            n_mels: 40,
            n_ceps: 40,
            spk_dim: 8,
            low_hz: 20.0,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ceps == 0 || self.n_ceps > self.n_mels {
            return Err(Error::InvalidConfig("need 0 < n_ceps <= n_mels".into()));
        }
        if self.hop_ms <= 0.0 || self.frame_ms <= self.hop_ms {
            return Err(Error::InvalidConfig("need frame_ms > hop_ms > 0".into()));
        }
        if self.spk_dim == 0 {
            return Err(Error::InvalidConfig("spk_dim must be positive".into()));
        }
        Ok(())
    }

    pub fn frame_len(&self, sample_rate: u32) -> usize {
        (self.frame_ms * f64::from(sample_rate) / 1000.0).round() as usize
    }

    pub fn hop_len(&self, sample_rate: u32) -> usize {
        (self.hop_ms * f64::from(sample_rate) / 1000.0).round() as usize
    }
}

/// Utterance-level mean subtraction.
pub fn cmn(f: &FeatureMatrix) -> FeatureMatrix {
    let mean = f.mean_row();
    let d = f.dims();
    let mut data = f.data.clone();
    for row in data.data_mut().chunks_mut(d) {
        for (v, m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    FeatureMatrix { data, kind: f.kind }
}

/// Appends the speaker vector to every MFCC row: `x_nsy`.
pub fn assemble_noisy_features(mfcc: &FeatureMatrix, spk: &[f64]) -> FeatureMatrix {
    let (t, d) = (mfcc.frames(), mfcc.dims());
    let mut data = Vec::with_capacity(t * (d + spk.len()));
    for r in 0..t {
        data.extend_from_slice(mfcc.data.row(r));
        data.extend_from_slice(spk);
    }
    FeatureMatrix {
        data: Tensor::from_parts(vec![t, d + spk.len()], data),
        kind: FeatureKind::Noisy,
    }
}
