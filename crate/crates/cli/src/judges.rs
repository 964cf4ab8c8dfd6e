use std::path::{Path, PathBuf};
use std::sync::Arc;

use hedge_core::judges::{BridgeClient, CachedEmbedder, CachedJudge, HashEmbedder, Instrumented, JudgeCache, RuleNli};
use hedge_core::{Embedder, EntailmentJudge, HedgeError, Result};

use crate::args::JudgeKind;

pub const CACHE_FILE: &str = "judge_cache.json";

/// Lexicon of the mock entailment judge.
pub fn mock_nli() -> RuleNli {
    RuleNli::new()
        .equivalent(&["yes", "Yes", "present"])
        .equivalent(&["no", "No", "absent", "none"])
        .equivalent(&["normal", "unremarkable", "no abnormality"])
        .contradiction("yes", "no")
        .contradiction("present", "absent")
        .contradiction("yes", "absent")
        .contradiction("no", "present")
        .contradiction("normal", "abnormal")
}

pub fn mock_embedder(seed: u64) -> HashEmbedder {
    HashEmbedder::new(64, seed)
}

/// The judges of one run, wrapped in item counters.
pub struct Judges {
    pub embedder: Instrumented<Box<dyn Embedder>>,
    pub nli: Instrumented<Box<dyn EntailmentJudge>>,
    cache: Option<(Arc<JudgeCache>, PathBuf)>,
}

impl Judges {
    pub fn mock(seed: u64) -> Self {
        Self {
            embedder: Instrumented::new(Box::new(mock_embedder(seed))),
            nli: Instrumented::new(Box::new(mock_nli())),
            cache: None,
        }
    }

    /// Connects to the bridge, checks `/health`, and layers the on-disk cache
    /// found under `out_root` over both judges.
    pub fn live(bridge_url: Option<&str>, out_root: &Path) -> Result<Self> {
        let url = bridge_url.ok_or_else(|| HedgeError::JudgeUnavailable("no bridge URL configured".into()))?;
        let client = Arc::new(BridgeClient::connect(url)?);
        client.health()?;
        let path = out_root.join(CACHE_FILE);
        let cache = JudgeCache::load_or_default(&path)?;
        Ok(Self {
            embedder: Instrumented::new(Box::new(CachedEmbedder::new(client.clone(), cache.clone()))),
            nli: Instrumented::new(Box::new(CachedJudge::new(client, cache.clone()))),
            cache: Some((cache, path)),
        })
    }

    pub fn build(kind: JudgeKind, bridge_url: Option<&str>, seed: u64, out_root: &Path) -> Result<Self> {
        match kind {
            JudgeKind::Mock => Ok(Self::mock(seed)),
            JudgeKind::Live => Self::live(bridge_url, out_root),
        }
    }

    /// Embedding texts plus entailment pairs requested so far.
    pub fn items(&self) -> u64 {
        (self.embedder.items() + self.nli.items()) as u64
    }

    pub fn persist(&self) -> Result<()> {
        if let Some((cache, path)) = &self.cache {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            cache.save(path)?;
        }
        Ok(())
    }
}
