use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::noise::{mix_at_snr, orthogonalize, speed_perturb, volume_perturb};
use crate::corpus::waveform::Waveform;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Split::Train => 0x7261_696e,
            Split::Test => 0x7465_7374,
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidConfig(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Hum,
    Modulated,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Hum, NoiseKind::Modulated];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Hum => "hum",
            NoiseKind::Modulated => "modulated",
        }
    }
}

/// One sinusoid of a phone's spectral prototype.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partial {
    pub freq_hz: f64,
    pub amplitude: f64,
}

/// Monophone unit inventory. State `k` belongs to phone `k / states_per_phone`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhoneInventory {
    pub prototypes: Vec<Vec<Partial>>,
    pub states_per_phone: usize,
}

impl PhoneInventory {
    /// Seeded prototypes: three formant-like partials per phone.
    pub fn generate(num_phones: usize, states_per_phone: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5048_4f4e_4553);
        let bands = [(250.0, 900.0), (900.0, 2300.0), (2300.0, 3800.0)];
        let prototypes = (0..num_phones)
            .map(|_| {
                bands
                    .iter()
                    .map(|&(lo, hi)| Partial {
                        freq_hz: rng.random_range(lo..hi),
                        amplitude: rng.random_range(0.2..1.0),
                    })
                    .collect()
            })
            .collect();
        Self {
            prototypes,
            states_per_phone,
        }
    }

    pub fn num_phones(&self) -> usize {
        self.prototypes.len()
    }

    /// Total state count `K = P × states_per_phone`.
    pub fn num_states(&self) -> usize {
        self.num_phones() * self.states_per_phone
    }

    pub fn state(&self, phone: usize, sub: usize) -> usize {
        phone * self.states_per_phone + sub
    }

    pub fn phone_of(&self, state: usize) -> usize {
        state / self.states_per_phone
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub num_train: usize,
    pub num_test: usize,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub num_phones: usize,
    pub states_per_phone: usize,
    pub num_speakers: usize,
    pub num_noise_types: usize,
    pub sample_rate: u32,
    pub min_phones: usize,
    pub max_phones: usize,
    pub min_segment_ms: f64,
    pub max_segment_ms: f64,
    /// Framing used to derive alignments.
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_train: 200,
            num_test: 50,
            snr_min_db: 10.0,
            snr_max_db: 20.0,
            num_phones: 10,
            states_per_phone: 1,
            num_speakers: 8,
            num_noise_types: 3,
            sample_rate: 16000,
            min_phones: 3,
            max_phones: 10,
            min_segment_ms: 80.0,
            max_segment_ms: 200.0,
            frame_ms: 25.0,
            hop_ms: 10.0,
            seed: 1,
        }
    }
}

impl CorpusConfig {
    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.num_train,
            Split::Test => self.num_test,
        }
    }

    pub fn frame_len(&self) -> usize {
        (self.frame_ms * f64::from(self.sample_rate) / 1000.0).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_ms * f64::from(self.sample_rate) / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..=40.0).contains(&self.snr_min_db)
            || !(0.0..=40.0).contains(&self.snr_max_db)
            || self.snr_min_db > self.snr_max_db
        {
            return bad("SNR range must lie within [0, 40] dB with min <= max");
        }
        if self.num_phones < 2 || self.states_per_phone == 0 || self.num_speakers == 0 {
            return bad("need >= 2 phones, >= 1 state per phone and >= 1 speaker");
        }
        if self.num_noise_types == 0 || self.num_noise_types > NoiseKind::ALL.len() {
            return bad("num_noise_types must be 1..=3");
        }
        if self.min_phones == 0 || self.min_phones > self.max_phones {
            return bad("phone count range is empty");
        }
        if self.min_segment_ms <= 0.0 || self.min_segment_ms > self.max_segment_ms {
            return bad("segment duration range is empty");
        }
        if self.frame_ms <= self.hop_ms || self.hop_ms <= 0.0 {
            return bad("frame_ms must exceed hop_ms > 0");
        }
        let min_seg = self.min_segment_ms * f64::from(self.sample_rate) / 1000.0;
        if (min_seg * self.min_phones as f64) < self.frame_len() as f64 {
            return bad("shortest utterance is shorter than one frame");
        }
        Ok(())
    }
}

/// A phone occupying samples `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub phone: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub speaker: String,
    pub clean: Waveform,
    pub noise: Waveform,
    pub noisy: Waveform,
    pub transcript: Vec<usize>,
    pub segments: Vec<Segment>,
    /// Per-frame state labels.
    pub alignment: Vec<usize>,
    pub snr_db: f64,
}

impl Utterance {
    /// Subset tag encoded as the last `-`-separated field of the id.
    pub fn subset(&self) -> &str {
        subset_of(&self.id)
    }
}

pub fn subset_of(id: &str) -> &str {
    id.rsplit('-').next().unwrap_or(id)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub split: Split,
    pub seed: u64,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn speakers(&self) -> Vec<String> {
        let mut s: Vec<String> = self.utterances.iter().map(|u| u.speaker.clone()).collect();
        s.sort();
        s.dedup();
        s
    }
}

pub fn speaker_name(i: usize) -> String {
    format!("spk{i:02}")
}

fn speaker_scale(seed: u64, speaker: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5350_4b00 ^ (speaker as u64) << 8);
    rng.random_range(0.92..1.08)
}

/// Frame count for `n` samples with frame length `l` and hop `h`; 0 if `n < l`.
pub fn num_frames(n: usize, l: usize, h: usize) -> usize {
    if n < l {
        0
    } else {
        (n - l) / h + 1
    }
}

/// Per-frame state labels taken at each frame's centre sample.
pub fn alignment_from_segments(
    segments: &[Segment],
    num_samples: usize,
    frame_len: usize,
    hop: usize,
    inventory: &PhoneInventory,
) -> Vec<usize> {
    let n = inventory.states_per_phone;
    (0..num_frames(num_samples, frame_len, hop))
        .map(|t| {
            let centre = t * hop + frame_len / 2;
            let seg = segments
                .iter()
                .find(|s| centre < s.end)
                .unwrap_or_else(|| segments.last().expect("at least one segment"));
            let len = (seg.end - seg.start).max(1);
            let offset = centre.saturating_sub(seg.start).min(len - 1);
            inventory.state(seg.phone, offset * n / len)
        })
        .collect()
}

fn utterance_rng(seed: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(split.salt().wrapping_mul(1_000_003) ^ index as u64);
    rng
}

fn render_noise(kind: NoiseKind, len: usize, sr: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        NoiseKind::White => (0..len).map(|_| -> f64 { StandardNormal.sample(rng) }).collect(),
        NoiseKind::Hum => {
            let base = 50.0 * rng.random_range(0.98..1.02);
            let harmonics: Vec<(f64, f64)> = (1..=8)
                .map(|h| (rng.random_range(0.2..1.0) / h as f64, rng.random_range(0.0..2.0 * PI)))
                .collect();
            (0..len)
                .map(|i| {
                    let t = i as f64 / sr;
                    let hum: f64 = harmonics
                        .iter()
                        .enumerate()
                        .map(|(h, &(a, ph))| a * (2.0 * PI * base * (h + 1) as f64 * t + ph).sin())
                        .sum();
                    hum + 0.05 * { let z: f64 = StandardNormal.sample(rng); z }
                })
                .collect()
        }
        NoiseKind::Modulated => {
            let fm = rng.random_range(1.0..6.0);
            let ph = rng.random_range(0.0..2.0 * PI);
            (0..len)
                .map(|i| {
                    let env = 1.0 + 0.9 * (2.0 * PI * fm * i as f64 / sr + ph).sin();
                    env * { let z: f64 = StandardNormal.sample(rng); z }
                })
                .collect()
        }
    }
}

/// Renders and mixes utterance `index` of `split`. Pure in `(config, index)`.
pub fn generate_utterance(
    config: &CorpusConfig,
    inventory: &PhoneInventory,
    split: Split,
    index: usize,
) -> Result<Utterance> {
    let mut rng = utterance_rng(config.seed, split, index);
    let sr = f64::from(config.sample_rate);
    let p = inventory.num_phones();

    // Train utterance i opens with phone perm[i mod P] so every phone is
    // covered once the split has at least P utterances.
    let mut perm: Vec<usize> = (0..p).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ 0x434f_5645_52));
    let len = rng.random_range(config.min_phones..=config.max_phones);
    let mut transcript = Vec::with_capacity(len);
    for i in 0..len {
        let phone = if i == 0 && split == Split::Train {
            perm[index % p]
        } else {
            loop {
                let c = rng.random_range(0..p);
                if transcript.last() != Some(&c) {
                    break c;
                }
            }
        };
        transcript.push(phone);
    }

    let speaker = rng.random_range(0..config.num_speakers);
    let spk_scale = speaker_scale(config.seed, speaker);
    let mut clean = Vec::new();
    let mut segments = Vec::with_capacity(len);
    let fade = (0.005 * sr) as usize;
    for &phone in &transcript {
        let dur_ms = rng.random_range(config.min_segment_ms..=config.max_segment_ms);
        let n = (dur_ms * sr / 1000.0).round() as usize;
        let start = clean.len();
        let gain = rng.random_range(0.6..1.4);
        let partials: Vec<(f64, f64, f64)> = inventory.prototypes[phone]
            .iter()
            .map(|pt| {
                let jitter = 1.0 + rng.random_range(-0.03..0.03);
                (
                    pt.freq_hz * spk_scale * jitter,
                    pt.amplitude * gain,
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        for i in 0..n {
            let t = i as f64 / sr;
            let env = if fade == 0 {
                1.0
            } else {
                let edge = i.min(n - 1 - i) as f64 / fade as f64;
                if edge >= 1.0 {
                    1.0
                } else {
                    0.5 - 0.5 * (PI * edge).cos()
                }
            };
            let tone: f64 = partials
                .iter()
                .map(|&(f, a, ph)| a * (2.0 * PI * f * t + ph).sin())
                .sum();
            let excitation: f64 = StandardNormal.sample(&mut rng);
            clean.push(0.1 * (env * tone + 0.02 * excitation));
        }
        segments.push(Segment {
            phone,
            start,
            end: clean.len(),
        });
    }
    let clean = Waveform::new(clean, config.sample_rate);

    let kind = NoiseKind::ALL[rng.random_range(0..config.num_noise_types)];
    let raw = Waveform::new(render_noise(kind, clean.len(), sr, &mut rng), config.sample_rate);
    let raw = orthogonalize(&raw, &clean)?;
    let snr_db = if config.snr_max_db > config.snr_min_db {
        rng.random_range(config.snr_min_db..config.snr_max_db)
    } else {
        config.snr_min_db
    };
    let noisy_mix = mix_at_snr(&clean, &raw, snr_db)?;
    // Store the scaled noise exactly as mixed so noisy == clean + noise.
    let noise = noisy_mix.sub_scaled(&clean, 1.0)?;
    let noisy = clean.add(&noise)?;

    let alignment = alignment_from_segments(
        &segments,
        clean.len(),
        config.frame_len(),
        config.hop_len(),
        inventory,
    );
    Ok(Utterance {
        id: format!("{}-{index:04}-{}", split.as_str(), kind.as_str()),
        speaker: speaker_name(speaker),
        clean,
        noise,
        noisy,
        transcript,
        segments,
        alignment,
        snr_db,
    })
}

/// Generates one split of the synthetic corpus. Deterministic given the seed.
pub fn generate_corpus(config: &CorpusConfig, split: Split) -> Result<Corpus> {
    config.validate()?;
    let count = config.count(split);
    if count == 0 {
        return Err(Error::InvalidConfig(format!(
            "{} split needs at least one utterance",
            split.as_str()
        )));
    }
    let inventory = PhoneInventory::generate(config.num_phones, config.states_per_phone, config.seed);
    let utterances = (0..count)
        .map(|i| generate_utterance(config, &inventory, split, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        utterances,
        split,
        seed: config.seed,
    })
}

fn rebuild_mix(
    id: String,
    src: &Utterance,
    clean: Waveform,
    noise: Waveform,
    segments: Vec<Segment>,
    config: &CorpusConfig,
    inventory: &PhoneInventory,
) -> Result<Utterance> {
    // Re-orthogonalize so gain-fitted noise derivation stays exact.
    let noise = orthogonalize(&noise, &clean)?;
    let noisy = clean.add(&noise)?;
    let alignment = alignment_from_segments(&segments, clean.len(), config.frame_len(), config.hop_len(), inventory);
    Ok(Utterance {
        id,
        speaker: src.speaker.clone(),
        snr_db: crate::corpus::waveform::snr_db(&clean, &noise),
        clean,
        noise,
        noisy,
        transcript: src.transcript.clone(),
        segments,
        alignment,
    })
}

fn with_tag(id: &str, tag: &str) -> String {
    // Keep the subset tag last.
    match id.rsplit_once('-') {
        Some((head, subset)) => format!("{head}{tag}-{subset}"),
        None => format!("{id}{tag}"),
    }
}

pub fn speed_perturb_utterance(
    u: &Utterance,
    factor: f64,
    config: &CorpusConfig,
    inventory: &PhoneInventory,
) -> Result<Utterance> {
    let clean = speed_perturb(&u.clean, factor)?;
    let noise = speed_perturb(&u.noise, factor)?;
    let n = clean.len();
    let mut segments: Vec<Segment> = u
        .segments
        .iter()
        .map(|s| Segment {
            phone: s.phone,
            start: ((s.start as f64 / factor).round() as usize).min(n),
            end: ((s.end as f64 / factor).round() as usize).min(n),
        })
        .collect();
    if let Some(last) = segments.last_mut() {
        last.end = n;
    }
    rebuild_mix(with_tag(&u.id, &format!("-sp{factor}")), u, clean, noise, segments, config, inventory)
}

pub fn volume_perturb_utterance(
    u: &Utterance,
    factor: f64,
    config: &CorpusConfig,
    inventory: &PhoneInventory,
) -> Result<Utterance> {
    let clean = volume_perturb(&u.clean, factor)?;
    let noise = volume_perturb(&u.noise, factor)?;
    rebuild_mix(
        with_tag(&u.id, &format!("-vp{factor:.3}")),
        u,
        clean,
        noise,
        u.segments.clone(),
        config,
        inventory,
    )
}

/// Original + one speed variant (0.9 or 1.1) + one volume variant per utterance.
pub fn triple_with_perturbations(corpus: &Corpus, config: &CorpusConfig) -> Result<Corpus> {
    let inventory = PhoneInventory::generate(config.num_phones, config.states_per_phone, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5045_5254);
    let mut out = Vec::with_capacity(corpus.len() * 3);
    for u in &corpus.utterances {
        let speed = if rng.random_bool(0.5) { 0.9 } else { 1.1 };
        let volume = rng.random_range(0.25..2.0);
        out.push(u.clone());
        out.push(speed_perturb_utterance(u, speed, config, &inventory)?);
        out.push(volume_perturb_utterance(u, volume, config, &inventory)?);
    }
    Ok(Corpus {
        utterances: out,
        split: corpus.split,
        seed: corpus.seed,
    })
}
