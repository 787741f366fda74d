//! Lattice-free MMI: phone bigram LM, numerator and denominator graphs,
//! log-space forward-backward, Viterbi decoding and the sequence objective.

pub mod graph;
pub mod lm;
pub mod search;

pub use graph::{build_denominator_graph, build_hmm, build_numerator_graph, Arc, Graph};
pub use lm::PhoneLm;
pub use search::{forward_backward, lfmmi_loss, viterbi_decode, Posteriors, ViterbiPath};
