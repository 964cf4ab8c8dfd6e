//! Embedding and entailment oracles.
//!
//! Clustering talks to two traits, [`Embedder`] and [`EntailmentJudge`].
//! Implementations live in [`bridge`] (HTTP client to the model service),
//! [`mock`] (deterministic, model-free) and [`cache`] (content-hash caching
//! wrappers). [`Instrumented`] counts items and calls for complexity checks.

pub mod bridge;
pub mod cache;
pub mod mock;

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HedgeError, Result};

pub use bridge::{BridgeClient, HttpTransport, Transport};
pub use cache::{CachedEmbedder, CachedJudge, JudgeCache};
pub use mock::{HashEmbedder, RuleNli, ScriptedNli, TableEmbedder};

/// Default request batch size.
pub const DEFAULT_BATCH_SIZE: usize = 512;

const UNIT_NORM_TOL: f64 = 1e-6;

/// Unit-length sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Scales `values` to unit length. Zero or non-finite vectors are rejected.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(HedgeError::Protocol("embedding has no finite values".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(HedgeError::Protocol("embedding has zero norm".into()));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() < UNIT_NORM_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntailmentLabel {
    Entails,
    Contradicts,
    Neutral,
}

impl EntailmentLabel {
    /// Argmax over `[entails, contradicts, neutral]`; ties resolve in that order.
    pub fn from_probs(probs: [f64; 3]) -> Self {
        let labels = [
            EntailmentLabel::Entails,
            EntailmentLabel::Contradicts,
            EntailmentLabel::Neutral,
        ];
        let mut best = 0;
        for i in 1..3 {
            if probs[i] > probs[best] {
                best = i;
            }
        }
        labels[best]
    }
}

pub type TextPair = (String, String);

pub trait Embedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>>;
}

pub trait EntailmentJudge: Send + Sync {
    /// Directed labels: `(premise, hypothesis)`.
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>>;
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts)
    }
}

impl<T: Embedder + ?Sized> Embedder for Arc<T> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        (**self).embed(texts)
    }
}

impl<T: EntailmentJudge + ?Sized> EntailmentJudge for &T {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        (**self).judge(pairs)
    }
}

impl<T: EntailmentJudge + ?Sized> EntailmentJudge for Box<T> {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        (**self).judge(pairs)
    }
}

impl<T: EntailmentJudge + ?Sized> EntailmentJudge for Arc<T> {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        (**self).judge(pairs)
    }
}

/// Embeds `texts`, checking the response shape and a shared dimension.
pub fn embed_batch<E: Embedder + ?Sized>(texts: &[String], judge: &E) -> Result<Vec<EmbeddingVector>> {
    if texts.is_empty() {
        return Err(HedgeError::InvalidConfig("embed_batch called with no texts".into()));
    }
    let vectors = judge.embed(texts)?;
    if vectors.len() != texts.len() {
        return Err(HedgeError::Protocol(format!(
            "expected {} embeddings, got {}",
            texts.len(),
            vectors.len()
        )));
    }
    let dim = vectors[0].dim();
    if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(HedgeError::DimensionMismatch {
            expected: dim,
            got: bad.dim(),
        });
    }
    Ok(vectors)
}

pub fn judge_pairs<J: EntailmentJudge + ?Sized>(pairs: &[TextPair], judge: &J) -> Result<Vec<EntailmentLabel>> {
    if pairs.is_empty() {
        return Err(HedgeError::InvalidConfig("judge_pairs called with no pairs".into()));
    }
    let labels = judge.judge(pairs)?;
    if labels.len() != pairs.len() {
        return Err(HedgeError::Protocol(format!(
            "expected {} labels, got {}",
            pairs.len(),
            labels.len()
        )));
    }
    Ok(labels)
}

/// Unique items in first-occurrence order plus the map from each input
/// position to its unique index.
pub fn dedup<T: Hash + Eq + Clone>(items: &[T]) -> (Vec<T>, Vec<usize>) {
    let mut index: HashMap<&T, usize> = HashMap::with_capacity(items.len());
    let mut unique = Vec::new();
    let back_map = items
        .iter()
        .map(|item| {
            *index.entry(item).or_insert_with(|| {
                unique.push(item.clone());
                unique.len() - 1
            })
        })
        .collect();
    (unique, back_map)
}

pub fn dedup_texts(texts: &[String]) -> (Vec<String>, Vec<usize>) {
    dedup(texts)
}

/// Counts items and calls passing through to the wrapped judge.
#[derive(Debug, Default)]
pub struct Instrumented<J> {
    inner: J,
    items: AtomicUsize,
    calls: AtomicUsize,
}

impl<J> Instrumented<J> {
    pub fn new(inner: J) -> Self {
        Self {
            inner,
            items: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn items(&self) -> usize {
        self.items.load(Ordering::Relaxed)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.items.store(0, Ordering::Relaxed);
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &J {
        &self.inner
    }

    fn record(&self, n: usize) {
        self.items.fetch_add(n, Ordering::Relaxed);
        self.calls.fetch_add(1, Ordering::Relaxed);
    }
}

impl<J: Embedder> Embedder for Instrumented<J> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        self.record(texts.len());
        self.inner.embed(texts)
    }
}

impl<J: EntailmentJudge> EntailmentJudge for Instrumented<J> {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        self.record(pairs.len());
        self.inner.judge(pairs)
    }
}
