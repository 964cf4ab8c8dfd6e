//! Deterministic judges that need no model.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{Embedder, EmbeddingVector, EntailmentJudge, EntailmentLabel, TextPair};
use crate::error::{HedgeError, Result};

/// Maps each text to a unit Gaussian direction seeded by `SHA-256(seed || text)`.
///
/// Equal strings get identical vectors; distinct strings are close to
/// orthogonal for moderate `dim` (cosine has standard deviation ~ `1/sqrt(dim)`).
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0);
        Self { dim, seed }
    }

    pub fn vector(&self, text: &str) -> EmbeddingVector {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(text.as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        let values = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        EmbeddingVector::normalized(values).expect("gaussian draw is non-zero")
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(64, 0)
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}

/// Embedder backed by an explicit text -> vector table.
#[derive(Debug, Clone, Default)]
pub struct TableEmbedder {
    table: HashMap<String, EmbeddingVector>,
}

impl TableEmbedder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, values: Vec<f64>) -> Result<()> {
        self.table.insert(text.into(), EmbeddingVector::normalized(values)?);
        Ok(())
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        texts
            .iter()
            .map(|t| {
                self.table
                    .get(t)
                    .cloned()
                    .ok_or_else(|| HedgeError::Protocol(format!("no table entry for `{t}`")))
            })
            .collect()
    }
}

/// Rule-based entailment: exact match entails; members of one equivalence
/// class entail each other; lexicon pairs contradict; anything else is neutral.
#[derive(Debug, Clone, Default)]
pub struct RuleNli {
    contradictions: HashSet<(String, String)>,
    classes: HashMap<String, usize>,
}

impl RuleNli {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers an unordered contradiction.
    pub fn contradiction(mut self, a: &str, b: &str) -> Self {
        self.contradictions.insert(ordered(a, b));
        self
    }

    /// Registers a set of texts that mutually entail one another.
    pub fn equivalent(mut self, texts: &[&str]) -> Self {
        let class = self.classes.values().max().map_or(0, |m| m + 1);
        for t in texts {
            self.classes.insert(t.to_string(), class);
        }
        self
    }

    pub fn label(&self, premise: &str, hypothesis: &str) -> EntailmentLabel {
        if premise == hypothesis {
            return EntailmentLabel::Entails;
        }
        if self.contradictions.contains(&ordered(premise, hypothesis)) {
            return EntailmentLabel::Contradicts;
        }
        match (self.classes.get(premise), self.classes.get(hypothesis)) {
            (Some(a), Some(b)) if a == b => EntailmentLabel::Entails,
            _ => EntailmentLabel::Neutral,
        }
    }
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl EntailmentJudge for RuleNli {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        Ok(pairs.iter().map(|(p, h)| self.label(p, h)).collect())
    }
}

/// Explicit directed label table; unlisted pairs are neutral.
#[derive(Debug, Clone, Default)]
pub struct ScriptedNli {
    labels: HashMap<TextPair, EntailmentLabel>,
}

impl ScriptedNli {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, premise: &str, hypothesis: &str, label: EntailmentLabel) {
        self.labels.insert((premise.to_string(), hypothesis.to_string()), label);
    }
}

impl EntailmentJudge for ScriptedNli {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        Ok(pairs
            .iter()
            .map(|p| self.labels.get(p).copied().unwrap_or(EntailmentLabel::Neutral))
            .collect())
    }
}
