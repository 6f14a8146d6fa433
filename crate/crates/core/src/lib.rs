//! Rational answer validation: defeasible argumentation with a specificity
//! quasi-ordering, standard deontic logic (K plus seriality) for norm
//! checking, case-based and decision-tree answer ranking, and a desk-scale
//! question-answering pipeline tying them together.
//!
//! The symbolic modules ([`kb`], [`derivation`], [`specificity`],
//! [`deontic`]) are scalar-free; the numeric ones ([`cbr`], [`pipeline`])
//! are generic over [`Scalar`] with the `f64` aliases below as the defaults
//! used by the command-line tools.

pub mod cbr;
pub mod deontic;
pub mod derivation;
pub mod kb;
pub mod num;
pub mod pipeline;
pub mod specificity;

pub use num::Scalar;

/// Default scalar for scores, probabilities, and metrics.
pub type Score = f64;
/// Feature vector over the default scalar.
pub type FeatureVector = cbr::FeatureVector<Score>;
/// Bagged-tree ranker over the default scalar.
pub type Ranker = cbr::Ranker<Score>;
/// Learning-curve point over the default scalar.
pub type CurvePoint = cbr::CurvePoint<Score>;
/// Pipeline answer output over the default scalar.
pub type AnswerOutput = pipeline::AnswerOutput<Score>;
/// Evaluation report over the default scalar.
pub type EvalReport = pipeline::EvalReport<Score>;
