//! Synthetic paired clean/noisy corpus, noise derivation and perturbation.

pub mod generate;
pub mod io;
pub mod noise;
pub mod waveform;

pub use generate::{
    alignment_from_segments, generate_corpus, generate_utterance, num_frames, subset_of,
    triple_with_perturbations, Corpus, CorpusConfig, NoiseKind, Partial, PhoneInventory, Segment,
    Split, Utterance,
};
pub use noise::{derive_noise, mix_at_snr, orthogonalize, snr_scale, speed_perturb, volume_perturb};
pub use waveform::{snr_db, Waveform};
