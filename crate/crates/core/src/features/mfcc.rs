use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::corpus::Waveform;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureKind, FeatureMatrix};
use crate::numerics::Tensor;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Splits a waveform into Hamming-windowed frames.
pub fn frame_signal(w: &Waveform, cfg: &FeatureConfig) -> Result<Vec<Vec<f64>>> {
    let l = cfg.frame_len(w.sample_rate);
    let h = cfg.hop_len(w.sample_rate);
    if w.len() < l {
        return Err(Error::TooShort { len: w.len(), need: l });
    }
    let window = hamming(l);
    let t = (w.len() - l) / h + 1;
    Ok((0..t)
        .map(|i| {
            w.samples[i * h..i * h + l]
                .iter()
                .zip(&window)
                .map(|(x, win)| x * win)
                .collect()
        })
        .collect())
}

pub fn hamming(l: usize) -> Vec<f64> {
    if l == 1 {
        return vec![1.0];
    }
    (0..l)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (l - 1) as f64).cos())
        .collect()
}

/// Triangular, area-unnormalized mel filters over `n_fft/2 + 1` bins,
/// spanning `low_hz` to Nyquist. Row-major `n_mels × n_bins`.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32, low_hz: f64) -> Vec<Vec<f64>> {
    let nyquist = f64::from(sample_rate) / 2.0;
    let (lo, hi) = (hz_to_mel(low_hz), hz_to_mel(nyquist));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    (0..n_mels)
        .map(|m| {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|b| {
                    let f = b as f64 * f64::from(sample_rate) / n_fft as f64;
                    if f <= left || f >= right {
                        0.0
                    } else if f <= centre {
                        (f - left) / (centre - left)
                    } else {
                        (right - f) / (right - centre)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis, `n_out × n_in`.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Vec<Vec<f64>> {
    let n = n_in as f64;
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            (0..n_in)
                .map(|i| s * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                .collect()
        })
        .collect()
}

/// Precomputed MFCC front-end for one sample rate.
pub struct MfccExtractor {
    cfg: FeatureConfig,
    sample_rate: u32,
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
    filterbank: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: &FeatureConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate()?;
        let n_fft = cfg.frame_len(sample_rate).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Ok(Self {
            filterbank: mel_filterbank(cfg.n_mels, n_fft, sample_rate, cfg.low_hz),
            dct: dct_matrix(cfg.n_ceps, cfg.n_mels),
            cfg: cfg.clone(),
            sample_rate,
            n_fft,
            fft,
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    /// Log mel energies (natural log, floored), `T × n_mels`.
    pub fn log_mel(&self, w: &Waveform) -> Result<Vec<Vec<f64>>> {
        if w.sample_rate != self.sample_rate {
            return Err(Error::InvalidConfig(format!(
                "extractor built for {} Hz, got {} Hz",
                self.sample_rate, w.sample_rate
            )));
        }
        let frames = frame_signal(w, &self.cfg)?;
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        Ok(frames
            .iter()
            .map(|frame| {
                buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
                for (c, &x) in buf.iter_mut().zip(frame) {
                    c.re = x;
                }
                self.fft.process(&mut buf);
                let power: Vec<f64> = buf[..self.n_fft / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
                self.filterbank
                    .iter()
                    .map(|filt| {
                        let e: f64 = filt.iter().zip(&power).map(|(a, p)| a * p).sum();
                        e.max(self.cfg.log_floor).ln()
                    })
                    .collect()
            })
            .collect())
    }

    /// Orthonormal DCT-II of each log-mel row, keeping `n_ceps` coefficients.
    pub fn cepstra(&self, log_mel: &[Vec<f64>]) -> Vec<Vec<f64>> {
        log_mel
            .iter()
            .map(|row| {
                self.dct
                    .iter()
                    .map(|basis| basis.iter().zip(row).map(|(b, x)| b * x).sum())
                    .collect()
            })
            .collect()
    }

    pub fn mfcc(&self, w: &Waveform, kind: FeatureKind) -> Result<FeatureMatrix> {
        let ceps = self.cepstra(&self.log_mel(w)?);
        FeatureMatrix::new(Tensor::from_rows(&ceps)?, kind)
    }
}

/// One-shot MFCC extraction; see [`MfccExtractor`] to amortize setup.
pub fn mfcc(w: &Waveform, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    MfccExtractor::new(cfg, w.sample_rate)?.mfcc(w, FeatureKind::Noisy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FeatureConfig {
        FeatureConfig::default()
    }

    #[test]
    fn frame_counts() {
        let w = Waveform::zeros(16000, 16000);
        assert_eq!(frame_signal(&w, &cfg()).unwrap().len(), 98);
        assert_eq!(frame_signal(&Waveform::zeros(400, 16000), &cfg()).unwrap().len(), 1);
        assert!(matches!(
            frame_signal(&Waveform::zeros(399, 16000), &cfg()),
            Err(Error::TooShort { len: 399, need: 400 })
        ));
    }

    #[test]
    fn dct_of_constant_row() {
        let ex = MfccExtractor::new(&cfg(), 16000).unwrap();
        let c = ex.cepstra(&[vec![1.7; 40]]);
        assert!((c[0][0] - 1.7 * 40f64.sqrt()).abs() < 1e-12);
        assert!(c[0][1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn silence_gives_floor_image() {
        let f = mfcc(&Waveform::zeros(1600, 16000), &cfg()).unwrap();
        let first = f.data.row(0).to_vec();
        assert!((first[0] - 1e-10f64.ln() * 40f64.sqrt()).abs() < 1e-9);
        for t in 1..f.frames() {
            assert_eq!(f.data.row(t), first.as_slice());
        }
    }

    #[test]
    fn full_dct_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Waveform::new((0..3200).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000);
        let ex = MfccExtractor::new(&cfg(), 16000).unwrap();
        let lm = ex.log_mel(&w).unwrap();
        let c = ex.cepstra(&lm);
        let basis = dct_matrix(40, 40);
        for (row, lrow) in c.iter().zip(&lm) {
            for n in 0..40 {
                let rec: f64 = (0..40).map(|k| basis[k][n] * row[k]).sum();
                assert!((rec - lrow[n]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn filters_are_nonempty_and_peak_at_most_one() {
        let fb = mel_filterbank(40, 512, 16000, 20.0);
        for f in &fb {
            let max = f.iter().copied().fold(0.0, f64::max);
            assert!(max > 0.0 && max <= 1.0);
        }
    }

    #[test]
    fn amplitude_scaling_only_moves_c0() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = Waveform::new((0..4000).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000);
        let a = mfcc(&w, &cfg()).unwrap();
        let b = mfcc(&w.scaled(3.0), &cfg()).unwrap();
        let shift = 2.0 * 3f64.ln() * 40f64.sqrt();
        for t in 0..a.frames() {
            assert!((b.data.get(t, 0) - a.data.get(t, 0) - shift).abs() < 1e-6);
            for k in 1..40 {
                assert!((b.data.get(t, k) - a.data.get(t, k)).abs() < 1e-6);
            }
        }
    }
}
