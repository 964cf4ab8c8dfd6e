//! The resolved configuration of one run and the hash that names its directory.

use std::path::{Path, PathBuf};

use hedge_core::{Eq1Mode, InputMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{JudgeKind, TauArg};
use crate::error::{usage, CliResult};

/// `--n`: a fixed pool size or the sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoolSize {
    Fixed(usize),
    Sweep(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub dataset_path: String,
    pub mode: InputMode,
    pub clustering: String,
    pub tau: Option<TauArg>,
    pub tune_split: Option<String>,
    pub k: Option<usize>,
    pub alpha: f64,
    pub n: Option<PoolSize>,
    pub eq1_mode: Eq1Mode,
    pub seed: u64,
    pub judges: JudgeKind,
    pub model: String,
    /// Not part of the hash: the same run against another bridge host is the same run.
    #[serde(skip)]
    pub bridge_url: Option<String>,
}

impl RunConfig {
    pub fn check(&self) -> CliResult<()> {
        if !self.alpha.is_finite() {
            return Err(usage("--alpha must be finite"));
        }
        if let Some(TauArg::Fixed(t)) = self.tau {
            if !(t > 0.0 && t <= 1.0) {
                return Err(usage(format!("--tau must lie in (0, 1], got {t}")));
            }
        }
        if self.k == Some(0) {
            return Err(usage("--k must be at least 1"));
        }
        if matches!(self.tau, Some(TauArg::Tune(_))) && self.tune_split.is_none() {
            return Err(usage("--tau tune needs an explicit --tune-split"));
        }
        if self.judges == JudgeKind::Live && self.bridge_url.is_none() {
            return Err(hedge_core::HedgeError::JudgeUnavailable(
                "live judges need --bridge-url or HEDGE_BRIDGE_URL".into(),
            )
            .into());
        }
        Ok(())
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex_prefix(&bytes, 12)
    }

    pub fn run_dir(&self, out_root: &Path) -> PathBuf {
        out_root.join(format!("{}-{}", self.command, self.hash()))
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], len: usize) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..len].to_string()
}
