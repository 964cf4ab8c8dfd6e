//! Hallucination detection benchmark engine.
//!
//! A [`QuestionCase`] holds a baseline answer plus balanced pools of clean and
//! noisy (distorted-image) samples. The pipeline assembles them into one
//! sequence, clusters it semantically ([`clustering`]), scores the clusters
//! with SE, RadFlag and VASE ([`metrics`]) and evaluates detectors by ROC-AUC
//! ([`evaluation`]).

pub mod clustering;
pub mod dataset;
pub mod distortion;
pub mod error;
pub mod evaluation;
pub mod judges;
pub mod metrics;
pub mod model;
pub mod union_find;

pub use clustering::{cluster_by_embedding, cluster_by_nli, Strategy};
pub use error::{HedgeError, Result};
pub use evaluation::{
    roc_auc, summarize, sweep_sampling_scale, tune_tau, EvalReport, LabeledScore, ScoredCase, SweepResult,
};
pub use judges::{Embedder, EmbeddingVector, EntailmentJudge, EntailmentLabel};
pub use metrics::{score_case, Eq1Mode, Metric, MetricScores, ScoringConfig};
pub use model::{
    assemble_sequence, canonicalize_labels, AnswerSample, AssembledSequence, ClusterLabeling, InputMode, Label,
    PromptConfig, QuestionCase,
};
