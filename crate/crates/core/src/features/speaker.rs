use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Frozen per-speaker unit vectors standing in for i-vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerTable {
    dim: usize,
    seed: u64,
    vectors: BTreeMap<String, Vec<f64>>,
}

fn name_hash(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl SpeakerTable {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws the speaker's vector on first registration; later calls are no-ops.
    pub fn register(&mut self, speaker: &str) {
        if self.vectors.contains_key(speaker) {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ name_hash(speaker));
        let mut v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        self.vectors.insert(speaker.to_string(), v);
    }

    pub fn embedding(&self, speaker: &str) -> Result<&[f64]> {
        self.vectors
            .get(speaker)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownSpeaker(speaker.to_string()))
    }

    pub fn speakers(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// Lookup against a table; the free-function form of [`SpeakerTable::embedding`].
pub fn speaker_embedding<'a>(speaker: &str, table: &'a SpeakerTable) -> Result<&'a [f64]> {
    table.embedding(speaker)
}
