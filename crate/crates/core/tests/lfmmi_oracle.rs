//! LF-MMI search against brute-force enumeration.

mod common;

use common::lfmmi_suite;

#[test]
fn forward_backward_and_viterbi_match_enumeration() {
    lfmmi_suite::forward_backward_and_viterbi_match_enumeration();
}

#[test]
fn built_graphs_match_enumeration() {
    lfmmi_suite::built_graphs_match_enumeration();
}

#[test]
fn zero_scores_give_lm_normalization() {
    lfmmi_suite::zero_scores_give_lm_normalization();
}

#[test]
fn identical_graphs_cancel() {
    lfmmi_suite::identical_graphs_cancel();
}
