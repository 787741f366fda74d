//! Speech-enhanced and noise-aware joint training for robust phone
//! recognition.
//!
//! A multi-task autoencoder splits noisy MFCC frames into enhanced-speech and
//! noise estimates; aggregated versions of both are concatenated with the
//! noisy frames and fed to a factorized TDNN acoustic model trained with
//! cross-entropy, lattice-free MMI and the two reconstruction losses.

pub mod acoustic_model;
pub mod aggregation;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod lfmmi;
pub mod nn;
pub mod numerics;
pub mod scoring;
pub mod senan;
pub mod training;

pub use error::{Error, Result};
