//! The end-to-end toy pipeline: lexical passage retrieval, per-candidate
//! reasoning over passage-attached facts, feature assembly, ranking, and
//! batch evaluation. Stage order is retrieval, ranking, reasoning,
//! validation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbr::{
    self, classify, feature_names, CaseBase, CbrError, FeatureVector, Label, Ranker, SemanticGraph,
};
use crate::derivation::{SearchBounds, TreeNode};
use crate::kb::{Fact, KbError, KnowledgeBase, Literal};
use crate::num::Scalar;
use crate::specificity::{warranted, SpecificityConfig, SpecificityError, Verdict};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("question contains no lexemes after tokenization")]
    EmptyQuestion,
    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },
    #[error("corpus line {line}: {detail}")]
    Corpus { line: usize, detail: String },
    #[error("dataset record {index} ({hint}): {detail}")]
    Dataset {
        index: usize,
        hint: String,
        detail: String,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset record {index}: corpus {corpus_ref:?} is not loaded")]
    MissingCorpus { index: usize, corpus_ref: String },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Cbr(#[from] CbrError),
    #[error(transparent)]
    Specificity(#[from] SpecificityError),
}

/// A sentence-sized text passage with the ground facts it contributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub id: String,
    pub text: String,
    pub facts: Vec<Literal>,
    pub extra_lexemes: Vec<String>,
}

impl Passage {
    pub fn lexemes(&self) -> BTreeSet<String> {
        let mut lex = tokenize(&self.text);
        lex.extend(self.extra_lexemes.iter().map(|l| l.to_lowercase()));
        lex
    }
}

/// Lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Deserialize)]
struct RawPassage {
    id: String,
    text: String,
    #[serde(default)]
    facts: Vec<String>,
    #[serde(default)]
    extra_lexemes: Vec<String>,
}

/// Parse a JSONL corpus: one passage object per line, ids unique, facts
/// ground.
pub fn load_corpus(content: &str) -> Result<Vec<Passage>, PipelineError> {
    let mut passages = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        let corpus_err = |detail: String| PipelineError::Corpus {
            line: line_no,
            detail,
        };
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPassage = serde_json::from_str(line).map_err(|e| corpus_err(e.to_string()))?;
        if !seen.insert(raw.id.clone()) {
            return Err(corpus_err(format!("duplicate passage id {:?}", raw.id)));
        }
        let mut facts = Vec::new();
        for text in &raw.facts {
            let literal =
                Literal::parse(text).map_err(|e| corpus_err(format!("fact {text:?}: {e}")))?;
            if !literal.is_ground() {
                return Err(corpus_err(format!("fact {text:?} must be ground")));
            }
            facts.push(literal);
        }
        passages.push(Passage {
            id: raw.id,
            text: raw.text,
            facts,
            extra_lexemes: raw.extra_lexemes,
        });
    }
    Ok(passages)
}

/// Lexical retrieval: score = |question lexemes ∩ passage lexemes| /
/// |question lexemes|, descending, ties by passage id, zero scores excluded,
/// at most `limit` results. Returns corpus indices with scores.
pub fn select_candidates<S: Scalar>(
    question: &str,
    corpus: &[Passage],
    limit: usize,
) -> Result<Vec<(usize, S)>, PipelineError> {
    if limit == 0 {
        return Err(PipelineError::InvalidConfig {
            detail: "limit must be at least 1".into(),
        });
    }
    let question_lexemes = tokenize(question);
    if question_lexemes.is_empty() {
        return Err(PipelineError::EmptyQuestion);
    }
    let mut scored: Vec<(usize, S)> = corpus
        .iter()
        .enumerate()
        .filter_map(|(index, passage)| {
            let overlap = passage.lexemes().intersection(&question_lexemes).count();
            (overlap > 0).then(|| (index, S::from_ratio(overlap, question_lexemes.len())))
        })
        .collect();
    scored.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .expect("finite score")
            .then_with(|| corpus[*ia].id.cmp(&corpus[*ib].id))
    });
    scored.truncate(limit);
    Ok(scored)
}

/// Pipeline defaults: up to 200 candidate passages, 5 answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub candidate_limit: usize,
    pub top_k: usize,
    pub seed: u64,
    pub knn_k: usize,
    pub max_universe: usize,
    pub bounds: SearchBounds,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            candidate_limit: 200,
            top_k: 5,
            seed: 0,
            knn_k: 3,
            max_universe: 20,
            bounds: SearchBounds::default(),
        }
    }
}

impl PipelineConfig {
    fn validate(&self) -> Result<(), PipelineError> {
        if self.top_k < 1 || self.top_k > self.candidate_limit {
            return Err(PipelineError::InvalidConfig {
                detail: format!(
                    "top_k must satisfy 1 <= top_k ({}) <= candidate_limit ({})",
                    self.top_k, self.candidate_limit
                ),
            });
        }
        Ok(())
    }

    fn specificity(&self) -> SpecificityConfig {
        SpecificityConfig {
            max_universe: self.max_universe,
            bounds: self.bounds,
        }
    }
}

/// One validated answer candidate.
#[derive(Debug, Clone, Serialize)]
pub struct AnswerItem<S: Scalar> {
    pub passage_id: String,
    pub verdict: Verdict,
    pub query: String,
    pub answer: String,
    pub score: S,
    pub features: FeatureVector<S>,
    pub explanation: Vec<TreeNode>,
}

/// A candidate removed from the batch, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct DroppedCandidate {
    pub passage_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnswerOutput<S: Scalar> {
    pub answers: Vec<AnswerItem<S>>,
    pub dropped: Vec<DroppedCandidate>,
}

/// Wall-clock stage costs. Reported next to the JSON report, never inside
/// it, so reports stay byte-identical across runs.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub retrieval_ms: f64,
    pub reasoning_ms: f64,
    pub ranking_ms: f64,
}

impl StageTimings {
    fn add(&mut self, other: &StageTimings) {
        self.retrieval_ms += other.retrieval_ms;
        self.reasoning_ms += other.reasoning_ms;
        self.ranking_ms += other.ranking_ms;
    }
}

fn graph_of_lexemes(lexemes: &BTreeSet<String>) -> SemanticGraph {
    SemanticGraph {
        nodes: lexemes.iter().cloned().collect(),
        edges: Vec::new(),
    }
}

fn answer_template(query: &Literal, verdict: Verdict, chain: Option<String>) -> String {
    match (verdict, chain) {
        (v, Some(chain)) => format!("{v}: {query}, because {chain}"),
        (v, None) => format!("{v}: {query}, no decisive argument"),
    }
}

type AnswerBatch<S> = (Vec<AnswerItem<S>>, Vec<DroppedCandidate>, StageTimings);

/// Run the full pipeline for one question and return every ranked candidate
/// (not yet cut to `top_k`), plus dropped candidates and stage timings.
fn answer_all<S: Scalar>(
    query: &Literal,
    question_text: &str,
    corpus: &[Passage],
    kb: &KnowledgeBase,
    case_base: Option<&CaseBase>,
    ranker: Option<&Ranker<S>>,
    config: &PipelineConfig,
) -> Result<AnswerBatch<S>, PipelineError> {
    config.validate()?;
    if !query.is_ground() {
        return Err(SpecificityError::NonGroundQuery {
            literal: query.to_string(),
        }
        .into());
    }
    let mut timings = StageTimings::default();

    // retrieval + lexical ranking
    let started = Instant::now();
    let candidates = select_candidates::<S>(question_text, corpus, config.candidate_limit)?;
    timings.retrieval_ms = started.elapsed().as_secs_f64() * 1e3;

    // reasoning per candidate
    let started = Instant::now();
    let question_graph = graph_of_lexemes(&tokenize(question_text));
    let spec_config = config.specificity();
    let mut items: Vec<AnswerItem<S>> = Vec::new();
    let mut dropped = Vec::new();
    for (index, overlap) in candidates {
        let passage = &corpus[index];
        let drop_with = |reason: String| DroppedCandidate {
            passage_id: passage.id.clone(),
            reason,
        };
        let mut candidate_kb = kb.clone();
        let mut bad_fact = None;
        for literal in &passage.facts {
            match Fact::new(literal.clone()) {
                Ok(fact) => {
                    candidate_kb.add_fact(fact);
                }
                Err(e) => {
                    bad_fact = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = bad_fact {
            dropped.push(drop_with(e.to_string()));
            continue;
        }
        let outcome = match warranted(&candidate_kb, query, &spec_config) {
            Ok(outcome) => outcome,
            Err(e) => {
                dropped.push(drop_with(e.to_string()));
                continue;
            }
        };

        // validation features
        let passage_graph = graph_of_lexemes(&passage.lexemes());
        let (cbr_score, cbr_confidence) = match case_base {
            Some(base) if !base.is_empty() => {
                let (label, confidence) =
                    classify::<S>(base, &question_graph, &passage_graph, config.knn_k)?;
                let score = match label {
                    Label::Correct => confidence,
                    Label::Incorrect => S::one() - confidence,
                };
                (score, confidence)
            }
            _ => (S::from_ratio(1, 2), S::zero()),
        };
        let proof_found = !outcome.pro.is_empty() || !outcome.con.is_empty();
        let proof_depth = outcome
            .pro
            .iter()
            .chain(outcome.con.iter())
            .map(|a| a.tree().depth())
            .max()
            .unwrap_or(0);
        let features = FeatureVector::from_pairs(&[
            (feature_names::CBR_SCORE, cbr_score),
            (feature_names::CBR_CONFIDENCE, cbr_confidence),
            (feature_names::LEXEME_OVERLAP, overlap),
            (
                feature_names::PROOF_FOUND,
                S::from_count(proof_found as usize),
            ),
            (feature_names::PROOF_DEPTH, S::from_count(proof_depth)),
        ])?;

        let winner = outcome.winning_argument();
        let explanation = winner
            .map(|a| vec![a.tree().to_json_node()])
            .unwrap_or_default();
        let chain = winner.map(|a| a.tree().render_chain());
        items.push(AnswerItem {
            passage_id: passage.id.clone(),
            verdict: outcome.verdict,
            query: query.to_string(),
            answer: answer_template(query, outcome.verdict, chain),
            score: S::zero(),
            features,
            explanation,
        });
    }
    timings.reasoning_ms = started.elapsed().as_secs_f64() * 1e3;

    // final ranking: learned when a ranker is given, transparent heuristic
    // otherwise (decisive verdicts, then proofs, then lexical overlap)
    let started = Instant::now();
    match ranker {
        Some(ranker) => {
            let vectors: Vec<FeatureVector<S>> =
                items.iter().map(|item| item.features.clone()).collect();
            let ranked = cbr::rank(ranker, &vectors)?;
            let mut reordered = Vec::with_capacity(items.len());
            let mut taken: Vec<Option<AnswerItem<S>>> = items.into_iter().map(Some).collect();
            for entry in ranked {
                let mut item = taken[entry.index].take().expect("rank is a permutation");
                item.score = entry.score;
                reordered.push(item);
            }
            items = reordered;
        }
        None => {
            for item in &mut items {
                let decisive = item.verdict != Verdict::Undecided;
                let proof = item
                    .features
                    .get(feature_names::PROOF_FOUND)
                    .unwrap_or(S::zero());
                let overlap = item
                    .features
                    .get(feature_names::LEXEME_OVERLAP)
                    .unwrap_or(S::zero());
                let four = S::from_count(4);
                let two = S::from_count(2);
                item.score = S::from_count(decisive as usize) * four + proof * two + overlap;
            }
            items.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite score"));
        }
    }
    timings.ranking_ms = started.elapsed().as_secs_f64() * 1e3;

    Ok((items, dropped, timings))
}

/// Answer one question: retrieval, reasoning, validation, and the `top_k`
/// cut. A candidate that fails inside the reasoning modules is dropped with
/// its reason; the batch never aborts for one candidate.
pub fn answer<S: Scalar>(
    query: &Literal,
    question_text: &str,
    corpus: &[Passage],
    kb: &KnowledgeBase,
    case_base: Option<&CaseBase>,
    ranker: Option<&Ranker<S>>,
    config: &PipelineConfig,
) -> Result<AnswerOutput<S>, PipelineError> {
    let (mut answers, dropped, _) =
        answer_all(query, question_text, corpus, kb, case_base, ranker, config)?;
    answers.truncate(config.top_k);
    Ok(AnswerOutput { answers, dropped })
}

/// One dataset entry: a question, its ground query literal, the corpus it
/// runs against, and gold labels per passage.
#[derive(Debug, Clone, Deserialize)]
pub struct DatasetRecord {
    pub question_text: String,
    pub query: String,
    pub corpus_ref: String,
    pub gold: BTreeMap<String, Label>,
}

/// Parse a dataset (a JSON array of records), naming the failing record on
/// error.
pub fn load_dataset(json: &str) -> Result<Vec<DatasetRecord>, PipelineError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(json).map_err(|e| PipelineError::Dataset {
            index: 0,
            hint: "top-level array".into(),
            detail: e.to_string(),
        })?;
    values
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            let hint = value
                .get("question_text")
                .and_then(|v| v.as_str())
                .unwrap_or("unnamed")
                .to_string();
            serde_json::from_value(value).map_err(|e| PipelineError::Dataset {
                index,
                hint,
                detail: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedAnswer<S: Scalar> {
    pub passage_id: String,
    pub verdict: Verdict,
    pub score: S,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResult<S: Scalar> {
    pub question: String,
    pub query: String,
    pub first_correct_rank: Option<usize>,
    pub answers: Vec<RankedAnswer<S>>,
    pub dropped: Vec<DroppedCandidate>,
}

/// The evaluation report. Serialization is deterministic: identical inputs
/// and seed produce byte-identical JSON.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport<S: Scalar> {
    pub stage_order: [&'static str; 4],
    pub seed: u64,
    pub questions: usize,
    pub mrr: S,
    pub top1_accuracy: S,
    pub per_query: Vec<QueryResult<S>>,
}

pub const STAGE_ORDER: [&str; 4] = ["retrieval", "ranking", "reasoning", "validation"];

/// Evaluate a dataset: per query, the rank of the first gold-correct passage
/// over the full candidate ranking; MRR and top-1 accuracy over queries.
pub fn evaluate<S: Scalar>(
    dataset: &[DatasetRecord],
    corpora: &BTreeMap<String, Vec<Passage>>,
    kb: &KnowledgeBase,
    case_base: Option<&CaseBase>,
    ranker: Option<&Ranker<S>>,
    config: &PipelineConfig,
) -> Result<(EvalReport<S>, StageTimings), PipelineError> {
    if dataset.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let mut timings = StageTimings::default();
    let mut per_query = Vec::with_capacity(dataset.len());
    let mut ranks: Vec<Option<usize>> = Vec::with_capacity(dataset.len());
    for (index, record) in dataset.iter().enumerate() {
        let corpus =
            corpora
                .get(&record.corpus_ref)
                .ok_or_else(|| PipelineError::MissingCorpus {
                    index,
                    corpus_ref: record.corpus_ref.clone(),
                })?;
        let query = Literal::parse(&record.query).map_err(|e| PipelineError::Dataset {
            index,
            hint: record.question_text.clone(),
            detail: format!("query {:?}: {e}", record.query),
        })?;
        let (items, dropped, query_timings) = answer_all(
            &query,
            &record.question_text,
            corpus,
            kb,
            case_base,
            ranker,
            config,
        )?;
        timings.add(&query_timings);
        let first_correct_rank = items
            .iter()
            .position(|item| record.gold.get(&item.passage_id) == Some(&Label::Correct))
            .map(|p| p + 1);
        ranks.push(first_correct_rank);
        per_query.push(QueryResult {
            question: record.question_text.clone(),
            query: record.query.clone(),
            first_correct_rank,
            answers: items
                .into_iter()
                .take(config.top_k)
                .map(|item| RankedAnswer {
                    passage_id: item.passage_id,
                    verdict: item.verdict,
                    score: item.score,
                })
                .collect(),
            dropped,
        });
    }
    let top1 = ranks.iter().filter(|r| **r == Some(1)).count();
    let report = EvalReport {
        stage_order: STAGE_ORDER,
        seed: config.seed,
        questions: dataset.len(),
        mrr: cbr::mrr(&ranks),
        top1_accuracy: S::from_ratio(top1, dataset.len()),
        per_query,
    };
    Ok((report, timings))
}
