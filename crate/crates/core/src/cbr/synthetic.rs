//! Seeded synthetic data: a separable case stream for the user-interaction
//! simulation and feature samples where only the CBR columns carry signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{feature_names, Case, FeatureVector, Label, SemanticGraph};
use crate::num::Scalar;

fn sample_graph(rng: &mut ChaCha8Rng, pool: &[String]) -> SemanticGraph {
    // the first pool label is an anchor shared by every graph of the cluster,
    // so same-cluster similarity is always strictly positive
    let mut nodes = vec![pool[0].clone()];
    let extra = rng.gen_range(2..=4);
    for _ in 0..extra {
        nodes.push(pool[rng.gen_range(0..pool.len())].clone());
    }
    let edges = nodes
        .windows(2)
        .map(|w| (w[0].clone(), "rel".to_string(), w[1].clone()))
        .collect();
    SemanticGraph { nodes, edges }
}

/// A stream of labeled cases in two far-apart clusters: correct cases draw
/// their labels from one pool, incorrect cases from a disjoint one, so
/// cross-cluster similarity is exactly zero.
pub fn separable_case_stream(n: usize, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let correct_pool: Vec<String> = (0..12).map(|i| format!("light{i}")).collect();
    let incorrect_pool: Vec<String> = (0..12).map(|i| format!("stone{i}")).collect();
    (0..n)
        .map(|_| {
            let label = if rng.gen_bool(0.5) {
                Label::Correct
            } else {
                Label::Incorrect
            };
            let pool = match label {
                Label::Correct => &correct_pool,
                Label::Incorrect => &incorrect_pool,
            };
            Case {
                question: sample_graph(&mut rng, pool),
                candidate: sample_graph(&mut rng, pool),
                label,
            }
        })
        .collect()
}

/// Labeled feature vectors where only `cbr_score` and `cbr_confidence`
/// separate the classes; the remaining columns are label-independent noise.
pub fn cbr_feature_samples<S: Scalar>(n: usize, seed: u64) -> Vec<(FeatureVector<S>, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = if rng.gen_bool(0.5) {
                Label::Correct
            } else {
                Label::Incorrect
            };
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            let (score, confidence) = match label {
                Label::Correct => (0.55 + 0.45 * u, 0.6 + 0.4 * v),
                Label::Incorrect => (0.45 * u, 0.4 * v),
            };
            let features = FeatureVector::from_pairs(&[
                (feature_names::CBR_SCORE, S::from_f64(score).unwrap()),
                (
                    feature_names::CBR_CONFIDENCE,
                    S::from_f64(confidence).unwrap(),
                ),
                (
                    feature_names::LEXEME_OVERLAP,
                    S::from_f64(rng.gen()).unwrap(),
                ),
                (
                    feature_names::PROOF_FOUND,
                    S::from_count(rng.gen_range(0..=1)),
                ),
                (
                    feature_names::PROOF_DEPTH,
                    S::from_count(rng.gen_range(0..6)),
                ),
            ])
            .expect("finite synthetic features");
            (features, label)
        })
        .collect()
}
