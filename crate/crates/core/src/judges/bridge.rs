//! JSON-over-HTTP client for the model bridge service.
//!
//! Wire protocol:
//!
//! ```text
//! POST /embed  {"texts": [...]}            -> {"dim": d, "vectors": [[...], ...]}
//! POST /nli    {"pairs": [["p","h"], ...]} -> {"labels": ["entails"|"contradicts"|"neutral", ...],
//!                                              "probs": [[e, c, n], ...]}   (probs optional)
//! GET  /health                             -> {"embed_model_id", "nli_model_id", "dim", ...}
//! ```
//!
//! Requests are deduplicated and split into batches of at most `batch_size`
//! items, so a call never issues more than `ceil(unique / batch_size)` requests.

use std::sync::{Arc, OnceLock};
use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{dedup, Embedder, EmbeddingVector, EntailmentJudge, EntailmentLabel, TextPair, DEFAULT_BATCH_SIZE};
use crate::error::{HedgeError, Result};

pub const BRIDGE_URL_ENV: &str = "HEDGE_BRIDGE_URL";

/// `--bridge-url` wins over `HEDGE_BRIDGE_URL`.
pub fn resolve_bridge_url(flag: Option<&str>) -> Option<String> {
    flag.map(str::to_string)
        .or_else(|| std::env::var(BRIDGE_URL_ENV).ok())
        .filter(|s| !s.trim().is_empty())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliRequest {
    pub pairs: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliResponse {
    #[serde(default)]
    pub labels: Vec<EntailmentLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<[f64; 3]>>,
}

impl NliResponse {
    /// Labels for `expected` pairs; probabilities take precedence when present.
    pub fn resolve(self, expected: usize) -> Result<Vec<EntailmentLabel>> {
        let labels = match self.probs {
            Some(probs) => probs.into_iter().map(EntailmentLabel::from_probs).collect(),
            None => self.labels,
        };
        if labels.len() != expected {
            return Err(HedgeError::Protocol(format!(
                "/nli returned {} labels for {expected} pairs",
                labels.len()
            )));
        }
        Ok(labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub embed_model_id: String,
    pub nli_model_id: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_model_id: Option<String>,
}

pub trait Transport: Send + Sync {
    fn post(&self, path: &str, body: &Value) -> Result<Value>;
    fn get(&self, path: &str) -> Result<Value>;
}

pub struct HttpTransport {
    client: Client,
    base_url: String,
}

impl HttpTransport {
    pub fn new(base_url: &str) -> Result<Self> {
        let client = Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| HedgeError::JudgeUnavailable(e.to_string()))?;
        Ok(Self {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
        })
    }

    fn finish(&self, path: &str, resp: reqwest::Result<reqwest::blocking::Response>) -> Result<Value> {
        let resp = resp.map_err(|e| HedgeError::JudgeUnavailable(format!("{}{path}: {e}", self.base_url)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(HedgeError::JudgeUnavailable(format!(
                "{}{path}: HTTP {status}",
                self.base_url
            )));
        }
        let bytes = resp.bytes().map_err(|e| HedgeError::JudgeUnavailable(e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| HedgeError::Protocol(format!("{path}: {e}")))
    }
}

impl Transport for HttpTransport {
    fn post(&self, path: &str, body: &Value) -> Result<Value> {
        let resp = self.client.post(format!("{}{path}", self.base_url)).json(body).send();
        self.finish(path, resp)
    }

    fn get(&self, path: &str) -> Result<Value> {
        let resp = self.client.get(format!("{}{path}", self.base_url)).send();
        self.finish(path, resp)
    }
}

/// Embedder and entailment judge backed by the bridge service.
pub struct BridgeClient {
    transport: Arc<dyn Transport>,
    batch_size: usize,
    dim: OnceLock<usize>,
}

impl BridgeClient {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            batch_size: DEFAULT_BATCH_SIZE,
            dim: OnceLock::new(),
        }
    }

    pub fn connect(base_url: &str) -> Result<Self> {
        Ok(Self::new(Arc::new(HttpTransport::new(base_url)?)))
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        self.batch_size = batch_size;
        self
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Queries `/health` and pins the embedding dimension it reports.
    pub fn health(&self) -> Result<HealthResponse> {
        let health: HealthResponse = decode(self.transport.get("/health")?, "/health")?;
        self.check_dim(health.dim)?;
        Ok(health)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        let expected = *self.dim.get_or_init(|| got);
        if expected != got {
            return Err(HedgeError::DimensionMismatch { expected, got });
        }
        Ok(())
    }
}

fn decode<T: for<'de> Deserialize<'de>>(value: Value, path: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| HedgeError::Protocol(format!("{path}: {e}")))
}

impl Embedder for BridgeClient {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let (unique, back_map) = dedup(texts);
        let mut vectors = Vec::with_capacity(unique.len());
        for chunk in unique.chunks(self.batch_size) {
            let body = serde_json::to_value(EmbedRequest { texts: chunk.to_vec() })?;
            let resp: EmbedResponse = decode(self.transport.post("/embed", &body)?, "/embed")?;
            if resp.vectors.len() != chunk.len() {
                return Err(HedgeError::Protocol(format!(
                    "/embed returned {} vectors for {} texts",
                    resp.vectors.len(),
                    chunk.len()
                )));
            }
            self.check_dim(resp.dim)?;
            for v in resp.vectors {
                if v.len() != resp.dim {
                    return Err(HedgeError::DimensionMismatch {
                        expected: resp.dim,
                        got: v.len(),
                    });
                }
                vectors.push(EmbeddingVector::normalized(v)?);
            }
        }
        Ok(back_map.into_iter().map(|i| vectors[i].clone()).collect())
    }
}

impl EntailmentJudge for BridgeClient {
    fn judge(&self, pairs: &[TextPair]) -> Result<Vec<EntailmentLabel>> {
        let (unique, back_map) = dedup(pairs);
        let mut labels = Vec::with_capacity(unique.len());
        for chunk in unique.chunks(self.batch_size) {
            let body = serde_json::to_value(NliRequest {
                pairs: chunk.iter().map(|(p, h)| [p.clone(), h.clone()]).collect(),
            })?;
            let resp: NliResponse = decode(self.transport.post("/nli", &body)?, "/nli")?;
            labels.extend(resp.resolve(chunk.len())?);
        }
        Ok(back_map.into_iter().map(|i| labels[i]).collect())
    }
}
