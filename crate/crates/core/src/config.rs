//! Flat `key = value` experiment configuration with dotted section keys.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::acoustic_model::{AmArch, AmConfig};
use crate::aggregation::AggregatorKind;
use crate::corpus::CorpusConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, SpecAugConfig};
use crate::senan::SenanConfig;

/// Which streams feed the acoustic model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Noisy features only.
    Baseline,
    /// SENAN outputs aggregated and appended to the noisy features.
    Proposed,
    /// Ground-truth clean and noise features in place of the SENAN outputs.
    Oracle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Proposed => "proposed",
            Mode::Oracle => "oracle",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "proposed" => Ok(Mode::Proposed),
            "oracle" => Ok(Mode::Oracle),
            _ => Err(Error::InvalidConfig(format!("mode must be baseline|proposed|oracle, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 5.0, beta: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub constraint_every: usize,
    pub momentum: f64,
    /// Gradient norm ceiling; 0 disables clipping.
    pub max_grad_norm: f64,
    pub weights: LossWeights,
    pub specaug: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Proposed,
            epochs: 20,
            batch_size: 8,
            lr_initial: 0.01,
            lr_final: 0.001,
            constraint_every: 4,
            momentum: 0.0,
            max_grad_norm: 0.0,
            weights: LossWeights::default(),
            specaug: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub corpus: CorpusConfig,
    /// Triple the training split with speed and volume perturbations.
    pub augment: bool,
    pub features: FeatureConfig,
    pub specaug: SpecAugConfig,
    pub senan: SenanConfig,
    pub agg_enh: AggregatorKind,
    pub agg_nse: AggregatorKind,
    /// STAT emits standard deviations instead of variances.
    pub agg_stat_std: bool,
    pub am: AmConfig,
    pub train: TrainConfig,
    pub acoustic_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            corpus: CorpusConfig::default(),
            augment: false,
            features: FeatureConfig::default(),
            specaug: SpecAugConfig::default(),
            senan: SenanConfig::default(),
            agg_enh: AggregatorKind::Cont,
            agg_nse: AggregatorKind::Stat,
            agg_stat_std: false,
            am: AmConfig::default(),
            train: TrainConfig::default(),
            acoustic_scale: 1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("bad boolean {v:?} for {key}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|x| parse(key, x.trim())).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "corpus.num_train" => self.corpus.num_train = parse(key, v)?,
            "corpus.num_test" => self.corpus.num_test = parse(key, v)?,
            "corpus.snr_min_db" => self.corpus.snr_min_db = parse(key, v)?,
            "corpus.snr_max_db" => self.corpus.snr_max_db = parse(key, v)?,
            "corpus.num_phones" => self.corpus.num_phones = parse(key, v)?,
            "corpus.states_per_phone" => self.corpus.states_per_phone = parse(key, v)?,
            "corpus.num_speakers" => self.corpus.num_speakers = parse(key, v)?,
            "corpus.num_noise_types" => self.corpus.num_noise_types = parse(key, v)?,
            "corpus.sample_rate" => self.corpus.sample_rate = parse(key, v)?,
            "corpus.min_phones" => self.corpus.min_phones = parse(key, v)?,
            "corpus.max_phones" => self.corpus.max_phones = parse(key, v)?,
            "corpus.min_segment_ms" => self.corpus.min_segment_ms = parse(key, v)?,
            "corpus.max_segment_ms" => self.corpus.max_segment_ms = parse(key, v)?,
            "corpus.seed" => self.corpus.seed = parse(key, v)?,
            "corpus.augment" => self.augment = parse_bool(key, v)?,
            "features.frame_ms" => {
                self.features.frame_ms = parse(key, v)?;
                self.corpus.frame_ms = self.features.frame_ms;
            }
            "features.hop_ms" => {
                self.features.hop_ms = parse(key, v)?;
                self.corpus.hop_ms = self.features.hop_ms;
            }
            "features.n_mels" => self.features.n_mels = parse(key, v)?,
            "features.n_ceps" => self.features.n_ceps = parse(key, v)?,
            "features.spk_dim" => self.features.spk_dim = parse(key, v)?,
            "features.low_hz" => self.features.low_hz = parse(key, v)?,
            "features.specaug_time_masks" => self.specaug.time_masks = parse(key, v)?,
            "features.specaug_max_time_width" => self.specaug.max_time_width = parse(key, v)?,
            "features.specaug_feature_masks" => self.specaug.feature_masks = parse(key, v)?,
            "features.specaug_max_feature_width" => self.specaug.max_feature_width = parse(key, v)?,
            "senan.h_first" => self.senan.h_first = parse(key, v)?,
            "senan.h_last" => self.senan.h_last = parse(key, v)?,
            "senan.noise_head" => self.senan.noise_head = parse_bool(key, v)?,
            "agg.enh" => self.agg_enh = v.parse()?,
            "agg.nse" => self.agg_nse = v.parse()?,
            "agg.stat_std" => self.agg_stat_std = parse_bool(key, v)?,
            "am.arch" => self.am.arch = v.parse()?,
            "am.layers" => self.am.layers = parse(key, v)?,
            "am.hidden" => self.am.hidden = parse(key, v)?,
            "am.bottleneck" => self.am.bottleneck = parse(key, v)?,
            "am.final_bottleneck" => self.am.final_bottleneck = parse(key, v)?,
            "am.bypass_scale" => self.am.bypass_scale = parse(key, v)?,
            "am.offsets" => self.am.offsets = parse_list(key, v)?,
            "am.conv_filters" => self.am.conv_filters = parse_list(key, v)?,
            "am.renorm" => self.am.renorm = parse_bool(key, v)?,
            "train.mode" => self.train.mode = v.parse()?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.lr_initial" => self.train.lr_initial = parse(key, v)?,
            "train.lr_final" => self.train.lr_final = parse(key, v)?,
            "train.constraint_every" => self.train.constraint_every = parse(key, v)?,
            "train.momentum" => self.train.momentum = parse(key, v)?,
            "train.max_grad_norm" => self.train.max_grad_norm = parse(key, v)?,
            "train.alpha" => self.train.weights.alpha = parse(key, v)?,
            "train.beta" => self.train.weights.beta = parse(key, v)?,
            "train.specaug" => self.train.specaug = parse_bool(key, v)?,
            "decode.acoustic_scale" => self.acoustic_scale = parse(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.corpus;
        let f = &self.features;
        let t = &self.train;
        vec![
            ("seed", self.seed.to_string()),
            ("corpus.num_train", c.num_train.to_string()),
            ("corpus.num_test", c.num_test.to_string()),
            ("corpus.snr_min_db", c.snr_min_db.to_string()),
            ("corpus.snr_max_db", c.snr_max_db.to_string()),
            ("corpus.num_phones", c.num_phones.to_string()),
            ("corpus.states_per_phone", c.states_per_phone.to_string()),
            ("corpus.num_speakers", c.num_speakers.to_string()),
            ("corpus.num_noise_types", c.num_noise_types.to_string()),
            ("corpus.sample_rate", c.sample_rate.to_string()),
            ("corpus.min_phones", c.min_phones.to_string()),
            ("corpus.max_phones", c.max_phones.to_string()),
            ("corpus.min_segment_ms", c.min_segment_ms.to_string()),
            ("corpus.max_segment_ms", c.max_segment_ms.to_string()),
            ("corpus.seed", c.seed.to_string()),
            ("corpus.augment", self.augment.to_string()),
            ("features.frame_ms", f.frame_ms.to_string()),
            ("features.hop_ms", f.hop_ms.to_string()),
            ("features.n_mels", f.n_mels.to_string()),
            ("features.n_ceps", f.n_ceps.to_string()),
            ("features.spk_dim", f.spk_dim.to_string()),
            ("features.low_hz", f.low_hz.to_string()),
            ("features.specaug_time_masks", self.specaug.time_masks.to_string()),
            ("features.specaug_max_time_width", self.specaug.max_time_width.to_string()),
            ("features.specaug_feature_masks", self.specaug.feature_masks.to_string()),
            ("features.specaug_max_feature_width", self.specaug.max_feature_width.to_string()),
            ("senan.h_first", self.senan.h_first.to_string()),
            ("senan.h_last", self.senan.h_last.to_string()),
            ("senan.noise_head", self.senan.noise_head.to_string()),
            ("agg.enh", self.agg_enh.to_string()),
            ("agg.nse", self.agg_nse.to_string()),
            ("agg.stat_std", self.agg_stat_std.to_string()),
            ("am.arch", self.am.arch.to_string()),
            ("am.layers", self.am.layers.to_string()),
            ("am.hidden", self.am.hidden.to_string()),
            ("am.bottleneck", self.am.bottleneck.to_string()),
            ("am.final_bottleneck", self.am.final_bottleneck.to_string()),
            ("am.bypass_scale", self.am.bypass_scale.to_string()),
            ("am.offsets", join(&self.am.offsets)),
            ("am.conv_filters", join(&self.am.conv_filters)),
            ("am.renorm", self.am.renorm.to_string()),
            ("train.mode", t.mode.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.lr_initial", t.lr_initial.to_string()),
            ("train.lr_final", t.lr_final.to_string()),
            ("train.constraint_every", t.constraint_every.to_string()),
            ("train.momentum", t.momentum.to_string()),
            ("train.max_grad_norm", t.max_grad_norm.to_string()),
            ("train.alpha", t.weights.alpha.to_string()),
            ("train.beta", t.weights.beta.to_string()),
            ("train.specaug", t.specaug.to_string()),
            ("decode.acoustic_scale", self.acoustic_scale.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Defaults overridden by the file's keys. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.features.validate()?;
        self.am.validate()?;
        if self.features.frame_ms != self.corpus.frame_ms || self.features.hop_ms != self.corpus.hop_ms {
            return Err(Error::InvalidConfig("corpus and feature framing differ".into()));
        }
        if self.senan.h_first == 0 || self.senan.h_last < self.senan.h_first {
            return Err(Error::InvalidConfig("senan sizes must be positive and nondecreasing".into()));
        }
        let t = &self.train;
        if t.batch_size == 0 || t.constraint_every == 0 {
            return Err(Error::InvalidConfig("train.batch_size and train.constraint_every must be positive".into()));
        }
        if !(t.lr_initial > 0.0 && t.lr_final > 0.0 && t.lr_final <= t.lr_initial) {
            return Err(Error::InvalidConfig("need 0 < train.lr_final <= train.lr_initial".into()));
        }
        if t.weights.alpha < 0.0 || t.weights.beta < 0.0 {
            return Err(Error::InvalidConfig("loss weights must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&t.momentum) || t.max_grad_norm < 0.0 {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1), max_grad_norm >= 0".into()));
        }
        if self.am.arch == AmArch::CnnTdnnf && self.features.n_ceps == 0 {
            return Err(Error::InvalidConfig("conv front-end needs cepstra".into()));
        }
        if self.acoustic_scale <= 0.0 {
            return Err(Error::InvalidConfig("decode.acoustic_scale must be positive".into()));
        }
        Ok(())
    }
}
