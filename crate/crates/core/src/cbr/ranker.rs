//! The learned re-ranker: an ensemble of probability-estimating decision
//! trees obtained by stratified bagging, their scores combined by averaging.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CbrError, FeatureVector, Label};
use crate::num::Scalar;

/// Training knobs. Ten trees is the ensemble default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            n_trees: 10,
            max_depth: 8,
            seed: 0,
        }
    }
}

/// A node of a trained tree: a binary threshold split, or a leaf carrying
/// the probability estimate for `correct`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionNode<S: Scalar> {
    Split {
        feature: String,
        threshold: S,
        left: Box<DecisionNode<S>>,
        right: Box<DecisionNode<S>>,
    },
    Leaf {
        probability: S,
    },
}

/// Bagged tree ensemble over a fixed feature-name schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranker<S: Scalar> {
    feature_names: Vec<String>,
    trees: Vec<DecisionNode<S>>,
}

impl<S: Scalar> Ranker<S> {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DecisionNode<S>] {
        &self.trees
    }

    /// Mean of the per-tree probability estimates, in [0, 1].
    pub fn score(&self, features: &FeatureVector<S>) -> Result<S, CbrError> {
        let row = self.to_row(features)?;
        let sum = self.trees.iter().fold(S::zero(), |acc, tree| {
            acc + eval_tree(tree, &self.feature_names, &row)
        });
        Ok(sum / S::from_count(self.trees.len().max(1)))
    }

    fn to_row(&self, features: &FeatureVector<S>) -> Result<Vec<S>, CbrError> {
        for name in features.names() {
            if !self.feature_names.iter().any(|n| n == name) {
                return Err(CbrError::UnknownFeature {
                    name: name.to_string(),
                });
            }
        }
        self.feature_names
            .iter()
            .map(|name| {
                features
                    .get(name)
                    .ok_or_else(|| CbrError::MissingFeature { name: name.clone() })
            })
            .collect()
    }
}

fn eval_tree<S: Scalar>(node: &DecisionNode<S>, names: &[String], row: &[S]) -> S {
    match node {
        DecisionNode::Leaf { probability } => *probability,
        DecisionNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let idx = names
                .iter()
                .position(|n| n == feature)
                .expect("feature from training");
            if row[idx] <= *threshold {
                eval_tree(left, names, row)
            } else {
                eval_tree(right, names, row)
            }
        }
    }
}

/// A trained ranker plus any training warnings (e.g. single-class input).
#[derive(Debug, Clone)]
pub struct Trained<S: Scalar> {
    pub ranker: Ranker<S>,
    pub warnings: Vec<String>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Train the bagged ensemble. Each tree sees a stratified bootstrap sample
/// (per-class draws with replacement preserve the class proportions exactly);
/// splits greedily minimize Gini impurity; leaves store the fraction of
/// `correct` samples. Single-class input degenerates to constant trees, with
/// a warning.
pub fn train_bagged_trees<S: Scalar>(
    samples: &[(FeatureVector<S>, Label)],
    config: &TrainConfig,
) -> Result<Trained<S>, CbrError> {
    if samples.is_empty() {
        return Err(CbrError::NoSamples);
    }
    let feature_names: Vec<String> = samples[0].0.names().map(str::to_string).collect();
    for (index, (features, _)) in samples.iter().enumerate() {
        features.validate()?;
        if features
            .names()
            .ne(feature_names.iter().map(String::as_str))
        {
            return Err(CbrError::InconsistentFeatures { index });
        }
    }
    let rows: Vec<Vec<S>> = samples
        .iter()
        .map(|(features, _)| {
            feature_names
                .iter()
                .map(|n| features.get(n).expect("validated"))
                .collect()
        })
        .collect();
    let labels: Vec<Label> = samples.iter().map(|(_, label)| *label).collect();

    let correct_pool: Vec<usize> = (0..samples.len())
        .filter(|&i| labels[i] == Label::Correct)
        .collect();
    let incorrect_pool: Vec<usize> = (0..samples.len())
        .filter(|&i| labels[i] == Label::Incorrect)
        .collect();
    let mut warnings = Vec::new();
    if correct_pool.is_empty() || incorrect_pool.is_empty() {
        warnings.push(
            "training data contains a single class; the ranker emits that class probability"
                .to_string(),
        );
    }

    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ splitmix64(t as u64 + 1));
        let mut bag = Vec::with_capacity(samples.len());
        for pool in [&correct_pool, &incorrect_pool] {
            for _ in 0..pool.len() {
                bag.push(pool[rng.gen_range(0..pool.len())]);
            }
        }
        trees.push(build_node(
            &feature_names,
            &rows,
            &labels,
            &bag,
            0,
            config.max_depth,
        ));
    }
    Ok(Trained {
        ranker: Ranker {
            feature_names,
            trees,
        },
        warnings,
    })
}

fn gini<S: Scalar>(positives: usize, total: usize) -> S {
    if total == 0 {
        return S::zero();
    }
    let p = S::from_ratio(positives, total);
    let q = S::one() - p;
    S::one() - p * p - q * q
}

fn leaf<S: Scalar>(labels: &[Label], indices: &[usize]) -> DecisionNode<S> {
    let positives = indices
        .iter()
        .filter(|&&i| labels[i] == Label::Correct)
        .count();
    DecisionNode::Leaf {
        probability: S::from_ratio(positives, indices.len().max(1)),
    }
}

fn build_node<S: Scalar>(
    names: &[String],
    rows: &[Vec<S>],
    labels: &[Label],
    indices: &[usize],
    depth: usize,
    max_depth: usize,
) -> DecisionNode<S> {
    let total = indices.len();
    let positives = indices
        .iter()
        .filter(|&&i| labels[i] == Label::Correct)
        .count();
    if total < 2 || positives == 0 || positives == total || depth >= max_depth {
        return leaf(labels, indices);
    }

    let parent_impurity: S = gini(positives, total);
    let n_features = rows[0].len();
    let mut best: Option<(S, usize, S)> = None;
    #[allow(clippy::needless_range_loop)] // `feature` indexes columns, not `rows`
    for feature in 0..n_features {
        let mut values: Vec<S> = indices.iter().map(|&i| rows[i][feature]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite feature"));
        values.dedup();
        for window in values.windows(2) {
            let two = S::from_count(2);
            let mut threshold = (window[0] + window[1]) / two;
            if threshold >= window[1] {
                // midpoint rounded up to the right value; fall back
                threshold = window[0];
            }
            let (mut left_total, mut left_pos) = (0usize, 0usize);
            for &i in indices {
                if rows[i][feature] <= threshold {
                    left_total += 1;
                    left_pos += usize::from(labels[i] == Label::Correct);
                }
            }
            let right_total = total - left_total;
            let right_pos = positives - left_pos;
            if left_total == 0 || right_total == 0 {
                continue;
            }
            let weighted = S::from_ratio(left_total, total) * gini::<S>(left_pos, left_total)
                + S::from_ratio(right_total, total) * gini::<S>(right_pos, right_total);
            let gain = parent_impurity - weighted;
            if gain > S::zero() && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, feature, threshold));
            }
        }
    }

    match best {
        None => leaf(labels, indices),
        Some((_, feature, threshold)) => {
            let (left, right): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| rows[i][feature] <= threshold);
            DecisionNode::Split {
                feature: names[feature].clone(),
                threshold,
                left: Box::new(build_node(names, rows, labels, &left, depth + 1, max_depth)),
                right: Box::new(build_node(
                    names,
                    rows,
                    labels,
                    &right,
                    depth + 1,
                    max_depth,
                )),
            }
        }
    }
}

/// One input candidate with its ensemble score, after sorting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate<S: Scalar> {
    pub index: usize,
    pub score: S,
}

/// Order candidates by descending ensemble score; exact ties keep the input
/// order.
pub fn rank<S: Scalar>(
    ranker: &Ranker<S>,
    candidates: &[FeatureVector<S>],
) -> Result<Vec<RankedCandidate<S>>, CbrError> {
    let mut out = Vec::with_capacity(candidates.len());
    for (index, features) in candidates.iter().enumerate() {
        out.push(RankedCandidate {
            index,
            score: ranker.score(features)?,
        });
    }
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite score"));
    Ok(out)
}

/// Fraction of split conditions per feature across all trees, summing to 1
/// when at least one split exists (all zero otherwise).
pub fn feature_usage<S: Scalar>(ranker: &Ranker<S>) -> BTreeMap<String, S> {
    fn count<S: Scalar>(node: &DecisionNode<S>, counts: &mut BTreeMap<String, usize>) {
        if let DecisionNode::Split {
            feature,
            left,
            right,
            ..
        } = node
        {
            *counts.entry(feature.clone()).or_default() += 1;
            count(left, counts);
            count(right, counts);
        }
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for tree in &ranker.trees {
        count(tree, &mut counts);
    }
    let total: usize = counts.values().sum();
    let mut out: BTreeMap<String, S> = ranker
        .feature_names
        .iter()
        .map(|name| (name.clone(), S::zero()))
        .collect();
    if total > 0 {
        for (name, n) in counts {
            out.insert(name, S::from_ratio(n, total));
        }
    }
    out
}
