//! Content-addressed judge caches.
//!
//! Texts are keyed by the SHA-256 of their UTF-8 bytes; pairs by the SHA-256
//! of the length-prefixed concatenation `len(p) || p || len(h) || h`, so the
//! directed pairs `(a, b)` and `(b, a)` never share a key.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{dedup, Embedder, EmbeddingVector, EntailmentJudge, EntailmentLabel, TextPair};
use crate::error::Result;

pub fn text_key(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes()))
}

pub fn pair_key(premise: &str, hypothesis: &str) -> String {
    let mut h = Sha256::new();
    h.update((premise.len() as u64).to_le_bytes());
    h.update(premise.as_bytes());
    h.update((hypothesis.len() as u64).to_le_bytes());
    h.update(hypothesis.as_bytes());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheData {
    embeddings: HashMap<String, EmbeddingVector>,
    nli: HashMap<String, EntailmentLabel>,
}

/// Shared, synchronized store for embeddings and entailment labels.
#[derive(Debug, Default)]
pub struct JudgeCache {
    data: Mutex<CacheData>,
}

impl JudgeCache {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// Loads a cache file, or starts empty when the file does not exist.
    pub fn load_or_default(path: &Path) -> Result<Arc<Self>> {
        if !path.exists() {
            return Ok(Self::new());
        }
        let data: CacheData = serde_json::from_slice(&fs::read(path)?)?;
        Ok(Arc::new(Self { data: Mutex::new(data) }))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let data = self.data.lock().unwrap();
        fs::write(path, serde_json::to_vec(&*data)?)?;
        Ok(())
    }

    pub fn len(&self) -> (usize, usize) {
        let data = self.data.lock().unwrap();
        (data.embeddings.len(), data.nli.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == (0, 0)
    }
}

/// Serves repeated texts from the cache and forwards each unseen text once.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: Arc<JudgeCache>,
}

impl<E> CachedEmbedder<E> {
    pub fn new(inner: E, cache: Arc<JudgeCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &Arc<JudgeCache> {
        &self.cache
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let keys: Vec<String> = texts.iter().map(|t| text_key(t)).collect();
        let missing: Vec<String> = {
            let data = self.cache.data.lock().unwrap();
            texts
                .iter()
                .zip(&keys)
                .filter(|(_, k)| !data.embeddings.contains_key(*k))
                .map(|(t, _)| t.clone())
                .collect()
        };
        if !missing.is_empty() {
            let (unique, _) = dedup(&missing);
            let fresh = self.inner.embed(&unique)?;
            let mut data = self.cache.data.lock().unwrap();
            for (t, v) in unique.iter().zip(fresh) {
                data.embeddings.insert(text_key(t), v);
            }
        }
        let data = self.cache.data.lock().unwrap();
        Ok(keys.iter().map(|k| data.embeddings[k].clone()).collect())
    }
}

pub struct CachedJudge<J> {
    inner: J,
    cache: Arc<JudgeCache>,
}

impl<J> CachedJudge<J> {
    pub fn new(inner: J, cache: Arc<JudgeCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &Arc<JudgeCache> {
        &self.cache
    }
}

impl<J: EntailmentJudge> EntailmentJudge for CachedJudge<J> {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        let keys: Vec<String> = pairs.iter().map(|(p, h)| pair_key(p, h)).collect();
        let missing: Vec<TextPair> = {
            let data = self.cache.data.lock().unwrap();
            pairs
                .iter()
                .zip(&keys)
                .filter(|(_, k)| !data.nli.contains_key(*k))
                .map(|(p, _)| p.clone())
                .collect()
        };
        if !missing.is_empty() {
            let (unique, _) = dedup(&missing);
            let fresh = self.inner.judge(&unique)?;
            let mut data = self.cache.data.lock().unwrap();
            for ((p, h), l) in unique.iter().zip(fresh) {
                data.nli.insert(pair_key(p, h), l);
            }
        }
        let data = self.cache.data.lock().unwrap();
        Ok(keys.iter().map(|k| data.nli[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judges::{HashEmbedder, Instrumented, RuleNli};

    fn texts(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pair_keys_are_directed_and_unambiguous() {
        assert_ne!(pair_key("a", "b"), pair_key("b", "a"));
        assert_ne!(pair_key("ab", "c"), pair_key("a", "bc"));
        assert_eq!(
            text_key(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn embedder_cache_is_transparent() {
        let plain = HashEmbedder::new(8, 1);
        let inner = Instrumented::new(plain);
        let cached = CachedEmbedder::new(&inner, JudgeCache::new());
        let input = texts(&["a", "b", "a", "c", "b"]);
        assert_eq!(cached.embed(&input).unwrap(), plain.embed(&input).unwrap());
        assert_eq!(inner.items(), 3);
        cached.embed(&input).unwrap();
        assert_eq!(inner.calls(), 1, "second call served from cache");
    }

    #[test]
    fn judge_cache_dedups_and_persists() {
        let rule = RuleNli::new().contradiction("yes", "no");
        let inner = Instrumented::new(rule.clone());
        let cache = JudgeCache::new();
        let cached = CachedJudge::new(&inner, cache.clone());
        let pairs: Vec<TextPair> = (0..100)
            .map(|i| {
                if i % 2 == 0 {
                    ("yes".into(), "no".into())
                } else {
                    ("no".into(), "yes".into())
                }
            })
            .collect();
        let got = cached.judge(&pairs).unwrap();
        assert_eq!(got, rule.judge(&pairs).unwrap());
        assert_eq!(inner.items(), 2);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        cache.save(&path).unwrap();
        let reloaded = JudgeCache::load_or_default(&path).unwrap();
        assert_eq!(reloaded.len(), (0, 2));
        let fresh = Instrumented::new(rule);
        let again = CachedJudge::new(&fresh, reloaded).judge(&pairs).unwrap();
        assert_eq!(again, got);
        assert_eq!(fresh.calls(), 0);
    }
}
