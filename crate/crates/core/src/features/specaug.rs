use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecAugConfig {
    pub time_masks: usize,
    pub max_time_width: usize,
    pub feature_masks: usize,
    pub max_feature_width: usize,
}

impl Default for SpecAugConfig {
    fn default() -> Self {
        Self {
            time_masks: 2,
            max_time_width: 20,
            feature_masks: 2,
            max_feature_width: 8,
        }
    }
}

/// Fills frames `[start, start+width)` with the utterance mean row.
pub fn mask_time(f: &mut FeatureMatrix, mean: &[f64], start: usize, width: usize) {
    let d = f.dims();
    let end = (start + width).min(f.frames());
    for row in f.data.data_mut()[start * d..end * d].chunks_mut(d) {
        row.copy_from_slice(mean);
    }
}

/// Fills coefficients `[start, start+width)` of every frame with their means.
pub fn mask_features(f: &mut FeatureMatrix, mean: &[f64], start: usize, width: usize) {
    let d = f.dims();
    let end = (start + width).min(d);
    for row in f.data.data_mut().chunks_mut(d) {
        row[start..end].copy_from_slice(&mean[start..end]);
    }
}

/// Applies independent time and feature masks with widths uniform in
/// `[0, max]`. The input is left untouched.
pub fn spec_augment<R: Rng + ?Sized>(
    f: &FeatureMatrix,
    cfg: &SpecAugConfig,
    rng: &mut R,
) -> Result<FeatureMatrix> {
    let (t, d) = (f.frames(), f.dims());
    if cfg.time_masks > 0 && cfg.max_time_width > t {
        return Err(Error::InvalidWidth(format!(
            "time width {} exceeds {t} frames",
            cfg.max_time_width
        )));
    }
    if cfg.feature_masks > 0 && cfg.max_feature_width > d {
        return Err(Error::InvalidWidth(format!(
            "feature width {} exceeds {d} dims",
            cfg.max_feature_width
        )));
    }
    let mean = f.mean_row();
    let mut out = f.clone();
    for _ in 0..cfg.time_masks {
        let w = rng.random_range(0..=cfg.max_time_width);
        let start = rng.random_range(0..=t - w);
        mask_time(&mut out, &mean, start, w);
    }
    for _ in 0..cfg.feature_masks {
        let w = rng.random_range(0..=cfg.max_feature_width);
        let start = rng.random_range(0..=d - w);
        mask_features(&mut out, &mean, start, w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::numerics::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(t: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMatrix::new(
            Tensor::matrix(t, d, (0..t * d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap(),
            FeatureKind::Noisy,
        )
        .unwrap()
    }

    #[test]
    fn no_masks_is_identity() {
        let f = random(30, 6, 1);
        let cfg = SpecAugConfig { time_masks: 0, feature_masks: 0, ..SpecAugConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(spec_augment(&f, &cfg, &mut rng).unwrap(), f);
    }

    #[test]
    fn full_width_time_mask_gives_mean_rows() {
        let f = random(12, 4, 3);
        let mean = f.mean_row();
        let mut g = f.clone();
        mask_time(&mut g, &mean, 0, 12);
        for r in 0..12 {
            assert_eq!(g.data.row(r), mean.as_slice());
        }
    }

    #[test]
    fn rejects_oversized_widths() {
        let f = random(10, 4, 3);
        let cfg = SpecAugConfig { max_time_width: 11, ..SpecAugConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(spec_augment(&f, &cfg, &mut rng), Err(Error::InvalidWidth(_))));
    }

    #[test]
    fn masked_fraction_matches_expectation() {
        let (t, w) = (100, 20);
        let f = random(t, 3, 4);
        let cfg = SpecAugConfig { time_masks: 1, max_time_width: w, feature_masks: 0, max_feature_width: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mean = f.mean_row();
        let mut masked = 0usize;
        let draws = 1000;
        for _ in 0..draws {
            let g = spec_augment(&f, &cfg, &mut rng).unwrap();
            masked += (0..t).filter(|&r| g.data.row(r) == mean.as_slice()).count();
        }
        let frac = masked as f64 / (draws * t) as f64;
        let expect = w as f64 / (2.0 * t as f64);
        assert!((frac - expect).abs() <= 0.1 * expect, "{frac} vs {expect}");
    }

    #[test]
    fn never_touches_entries_outside_bands() {
        let f = random(40, 10, 6);
        let mean = f.mean_row();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let g = spec_augment(&f, &SpecAugConfig { max_feature_width: 4, ..SpecAugConfig::default() }, &mut rng).unwrap();
            for r in 0..40 {
                for c in 0..10 {
                    let (a, b) = (f.data.get(r, c), g.data.get(r, c));
                    assert!(a == b || b == mean[c]);
                }
            }
        }
    }
}
