//! Case-based answer validation: labeled (question-graph, answer-graph)
//! cases, an overlap-based graph similarity, k-nearest-neighbor
//! classification, the user-interaction learning curve, and the mean
//! reciprocal rank metric. The learned re-ranker lives in [`ranker`].

mod ranker;
pub mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

pub use ranker::{
    feature_usage, rank, train_bagged_trees, DecisionNode, RankedCandidate, Ranker, TrainConfig,
    Trained,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CbrError {
    #[error("case base is empty")]
    EmptyCaseBase,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("edge endpoint {label:?} does not occur among the nodes")]
    DanglingEdge { label: String },
    #[error("checkpoints must be ascending and at least 1")]
    BadCheckpoints,
    #[error("checkpoint {checkpoint} exceeds the stream length {len}")]
    CheckpointOutOfRange { checkpoint: usize, len: usize },
    #[error("no training samples")]
    NoSamples,
    #[error("sample {index} has feature names differing from the first sample")]
    InconsistentFeatures { index: usize },
    #[error("unknown feature {name:?}")]
    UnknownFeature { name: String },
    #[error("missing feature {name:?}")]
    MissingFeature { name: String },
    #[error("feature {name:?} is not a finite number")]
    NonFiniteFeature { name: String },
}

/// An edge of a semantic graph: (source label, edge type, target label).
pub type Edge = (String, String, String);

/// A structural stand-in for a sentence-semantics graph: label and edge
/// multisets (lists may repeat entries).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticGraph {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

impl SemanticGraph {
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<SemanticGraph, CbrError> {
        let graph = SemanticGraph { nodes, edges };
        graph.validate()?;
        Ok(graph)
    }

    /// Every edge endpoint must occur among the nodes.
    pub fn validate(&self) -> Result<(), CbrError> {
        for (src, _, dst) in &self.edges {
            for label in [src, dst] {
                if !self.nodes.contains(label) {
                    return Err(CbrError::DanglingEdge {
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn multiset_intersection<T: Ord>(a: &[T], b: &[T]) -> usize {
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for item in a {
        *counts.entry(item).or_default() += 1;
    }
    let mut shared = 0;
    for item in b {
        if let Some(count) = counts.get_mut(item) {
            if *count > 0 {
                *count -= 1;
                shared += 1;
            }
        }
    }
    shared
}

/// Overlap similarity in [0, 1]:
/// (shared nodes + shared edges) / (max(|nodes|) + max(|edges|)),
/// counting multiplicity; two empty graphs are fully similar.
pub fn graph_similarity<S: Scalar>(g1: &SemanticGraph, g2: &SemanticGraph) -> S {
    let shared =
        multiset_intersection(&g1.nodes, &g2.nodes) + multiset_intersection(&g1.edges, &g2.edges);
    let denominator = g1.nodes.len().max(g2.nodes.len()) + g1.edges.len().max(g2.edges.len());
    if denominator == 0 {
        S::one()
    } else {
        S::from_ratio(shared, denominator)
    }
}

/// Supervised classification of an answer candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Incorrect,
}

/// A supervised case: question graph, candidate graph, and whether the
/// candidate answered the question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case {
    pub question: SemanticGraph,
    pub candidate: SemanticGraph,
    pub label: Label,
}

/// A `Case` that has not been labeled yet; what classification queries look
/// like on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasePair {
    pub question: SemanticGraph,
    pub candidate: SemanticGraph,
}

/// Append-only store of experience cases; indices are stable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseBase {
    cases: Vec<Case>,
}

impl CaseBase {
    pub fn new() -> CaseBase {
        CaseBase::default()
    }

    pub fn from_cases(cases: Vec<Case>) -> CaseBase {
        CaseBase { cases }
    }

    pub fn push(&mut self, case: Case) {
        self.cases.push(case);
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Case> {
        self.cases.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter()
    }
}

/// k-nearest-neighbor classification. Distance is one minus the mean of the
/// question-pair and candidate-pair similarities; distance ties prefer the
/// lower case index, vote ties resolve to `incorrect`. The confidence is the
/// majority fraction of the k votes.
pub fn classify<S: Scalar>(
    base: &CaseBase,
    question: &SemanticGraph,
    candidate: &SemanticGraph,
    k: usize,
) -> Result<(Label, S), CbrError> {
    if base.is_empty() {
        return Err(CbrError::EmptyCaseBase);
    }
    if k == 0 {
        return Err(CbrError::InvalidK);
    }
    let two = S::from_count(2);
    let mut scored: Vec<(S, usize)> = base
        .iter()
        .enumerate()
        .map(|(index, case)| {
            let sim_q: S = graph_similarity(question, &case.question);
            let sim_c: S = graph_similarity(candidate, &case.candidate);
            (S::one() - (sim_q + sim_c) / two, index)
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distance")
            .then_with(|| a.1.cmp(&b.1))
    });
    let k_eff = k.min(base.len());
    let correct_votes = scored[..k_eff]
        .iter()
        .filter(|(_, index)| base.get(*index).expect("stable index").label == Label::Correct)
        .count();
    let incorrect_votes = k_eff - correct_votes;
    let (label, votes) = if correct_votes > incorrect_votes {
        (Label::Correct, correct_votes)
    } else {
        (Label::Incorrect, incorrect_votes)
    };
    Ok((label, S::from_ratio(votes, k_eff)))
}

/// One checkpoint of the user-interaction simulation. `on_correct` and
/// `on_incorrect` are absent until a case of that label has been seen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint<S: Scalar> {
    pub cases: usize,
    pub overall: S,
    pub on_correct: Option<S>,
    pub on_incorrect: Option<S>,
}

/// Simulate reliable user feedback: classify each case against the base
/// built so far, record the hit, then append the case with its true label.
/// Classification against an empty base conservatively predicts `incorrect`.
/// Reports cumulative accuracy (overall and per true label) at the given
/// checkpoints.
pub fn interaction_curve<S: Scalar>(
    stream: &[Case],
    checkpoints: &[usize],
    k: usize,
) -> Result<Vec<CurvePoint<S>>, CbrError> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.first() == Some(&0) {
        return Err(CbrError::BadCheckpoints);
    }
    if let Some(&last) = checkpoints.last() {
        if last > stream.len() {
            return Err(CbrError::CheckpointOutOfRange {
                checkpoint: last,
                len: stream.len(),
            });
        }
    }

    let mut base = CaseBase::new();
    let mut points = Vec::new();
    let (mut hits, mut correct_seen, mut correct_hits, mut incorrect_seen, mut incorrect_hits) =
        (0usize, 0usize, 0usize, 0usize, 0usize);
    for (i, case) in stream.iter().enumerate() {
        let predicted = if base.is_empty() {
            Label::Incorrect
        } else {
            classify::<S>(&base, &case.question, &case.candidate, k)?.0
        };
        let hit = predicted == case.label;
        hits += hit as usize;
        match case.label {
            Label::Correct => {
                correct_seen += 1;
                correct_hits += hit as usize;
            }
            Label::Incorrect => {
                incorrect_seen += 1;
                incorrect_hits += hit as usize;
            }
        }
        base.push(case.clone());
        if checkpoints.contains(&(i + 1)) {
            points.push(CurvePoint {
                cases: i + 1,
                overall: S::from_ratio(hits, i + 1),
                on_correct: (correct_seen > 0).then(|| S::from_ratio(correct_hits, correct_seen)),
                on_incorrect: (incorrect_seen > 0)
                    .then(|| S::from_ratio(incorrect_hits, incorrect_seen)),
            });
        }
    }
    Ok(points)
}

/// Mean reciprocal rank: mean over queries of 1/(rank of the first correct
/// answer), with 0 contributed by queries where none is ranked. Ranks are
/// 1-based.
pub fn mrr<S: Scalar>(first_correct_ranks: &[Option<usize>]) -> S {
    if first_correct_ranks.is_empty() {
        return S::zero();
    }
    let total = first_correct_ranks
        .iter()
        .fold(S::zero(), |acc, rank| match rank {
            Some(rank) => {
                assert!(*rank >= 1, "ranks are 1-based");
                acc + S::one() / S::from_count(*rank)
            }
            None => acc,
        });
    total / S::from_count(first_correct_ranks.len())
}

/// Feature names shared between the pipeline and the ranker.
pub mod feature_names {
    pub const CBR_SCORE: &str = "cbr_score";
    pub const CBR_CONFIDENCE: &str = "cbr_confidence";
    pub const LEXEME_OVERLAP: &str = "lexeme_overlap";
    pub const PROOF_FOUND: &str = "proof_found";
    pub const PROOF_DEPTH: &str = "proof_depth";
}

/// Named numeric features for one answer candidate. All values must be
/// finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct FeatureVector<S: Scalar> {
    values: BTreeMap<String, S>,
}

impl<S: Scalar> FeatureVector<S> {
    pub fn new() -> FeatureVector<S> {
        FeatureVector {
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: S) -> Result<(), CbrError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(CbrError::NonFiniteFeature { name });
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn from_pairs(pairs: &[(&str, S)]) -> Result<FeatureVector<S>, CbrError> {
        let mut out = FeatureVector::new();
        for (name, value) in pairs {
            out.insert(*name, *value)?;
        }
        Ok(out)
    }

    pub fn get(&self, name: &str) -> Option<S> {
        self.values.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Any value that is not a finite number, e.g. after deserializing.
    pub fn validate(&self) -> Result<(), CbrError> {
        for (name, value) in &self.values {
            if !value.is_finite() {
                return Err(CbrError::NonFiniteFeature { name: name.clone() });
            }
        }
        Ok(())
    }
}
