use crate::error::{Error, Result};

/// Mono audio at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, g: f64) -> Self {
        Self::new(self.samples.iter().map(|x| g * x).collect(), self.sample_rate)
    }

    pub(crate) fn check_same_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    /// Sample-wise `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_len(other)?;
        Ok(Self::new(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            self.sample_rate,
        ))
    }

    /// Sample-wise `self − g·other`.
    pub fn sub_scaled(&self, other: &Self, g: f64) -> Result<Self> {
        self.check_same_len(other)?;
        Ok(Self::new(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - g * b).collect(),
            self.sample_rate,
        ))
    }
}

/// `10·log10(P_signal / P_noise)`.
pub fn snr_db(signal: &Waveform, noise: &Waveform) -> f64 {
    10.0 * (signal.power() / noise.power()).log10()
}
