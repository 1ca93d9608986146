//! Acceptance gate: one test per verification criterion.
//!
//! Each test prints the same pass/fail line the `verify` subcommand emits
//! (visible with `--nocapture`) and fails with the criterion's detail text.

use randcompute::verify::{self, CriterionResult};

fn assert_criterion(r: CriterionResult) {
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_1_consumed_results_match_the_reference_evaluation() {
    assert_criterion(verify::trace_oracle());
}

#[test]
fn criterion_2_walk_spectra_and_closed_form_rates() {
    assert_criterion(verify::spectra_and_rate_forms());
}

#[test]
fn criterion_3_stability_sandwich_on_the_five_node_star() {
    assert_criterion(verify::stability_sandwich());
}

#[test]
fn criterion_4_hitting_and_mixing_oracles() {
    assert_criterion(verify::hitting_and_mixing_oracles());
}

#[test]
fn criterion_5_fundamental_matrix_identities_on_random_graphs() {
    assert_criterion(verify::fundamental_matrix_numerics());
}

#[test]
fn criterion_6_second_moment_degree_identity() {
    assert_criterion(verify::degree_moment_identity());
}

#[test]
fn criterion_7_latency_scaling_with_graph_size() {
    assert_criterion(verify::latency_scaling());
}

#[test]
fn criterion_8_byte_identical_artifacts() {
    assert_criterion(verify::artifact_determinism());
}

#[test]
fn criterion_9_leaf_cover_conservation() {
    assert_criterion(verify::leaf_cover_sampling());
}
