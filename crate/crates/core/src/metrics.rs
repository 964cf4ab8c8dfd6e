//! Semantic distributions and the three hallucination scores.
//!
//! The semantic distribution of one condition (clean or noisy pool) is
//!
//! ```text
//! s_j = exp(sum_{i in j} exp(lp_i - max_k lp_k)) / sum_m exp(sum_{i in m} exp(lp_i - max_k lp_k))
//! ```
//!
//! where the max runs over that condition's pool only. [`Eq1Mode::SumNormalized`]
//! drops the outer `exp` and normalizes the inner sums directly.
//!
//! Clean and noisy distributions live on a shared *joint support*: the
//! clusters occupied by at least one clean or noisy answer, in cluster-id
//! order. A cluster unoccupied in one condition gets mass 0 there. The
//! baseline answer `A0` carries no mass; it only anchors RadFlag.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_texts, Strategy};
use crate::error::{HedgeError, Result};
use crate::judges::{Embedder, EntailmentJudge};
use crate::model::{assemble_sequence, ClusterLabeling, InputMode, QuestionCase, Spans};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eq1Mode {
    /// Outer exponential of the per-cluster inner sums.
    #[default]
    Verbatim,
    /// Per-cluster inner sums normalized directly.
    SumNormalized,
}

impl Eq1Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Eq1Mode::Verbatim => "verbatim",
            Eq1Mode::SumNormalized => "sum_normalized",
        }
    }
}

impl FromStr for Eq1Mode {
    type Err = HedgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(Eq1Mode::Verbatim),
            "sum_normalized" | "sum-normalized" => Ok(Eq1Mode::SumNormalized),
            other => Err(HedgeError::InvalidConfig(format!("unknown eq1 mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Clean,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticDistribution {
    pub mass: Vec<f64>,
    pub condition: Condition,
}

/// Computes one condition's distribution. `slots[i]` is the joint-support
/// index of response `i`; `support` is the joint support size.
pub fn semantic_distribution(
    logprobs: &[f64],
    slots: &[usize],
    support: usize,
    condition: Condition,
    mode: Eq1Mode,
) -> Result<SemanticDistribution> {
    if logprobs.is_empty() {
        return Err(HedgeError::EmptyPool);
    }
    if logprobs.len() != slots.len() {
        return Err(HedgeError::InvalidConfig(format!(
            "{} log-probs for {} cluster ids",
            logprobs.len(),
            slots.len()
        )));
    }
    if let Some(bad) = logprobs.iter().find(|v| !v.is_finite()) {
        return Err(HedgeError::InvalidConfig(format!("non-finite log-prob {bad}")));
    }
    if let Some(&bad) = slots.iter().find(|&&s| s >= support) {
        return Err(HedgeError::InvalidConfig(format!(
            "cluster slot {bad} outside support of {support}"
        )));
    }

    let max_lp = logprobs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut inner = vec![0.0; support];
    let mut occupied = vec![false; support];
    for (&lp, &slot) in logprobs.iter().zip(slots) {
        inner[slot] += (lp - max_lp).exp();
        occupied[slot] = true;
    }

    let mut mass = vec![0.0; support];
    match mode {
        Eq1Mode::Verbatim => {
            // exp(a_j) / sum exp(a_m) evaluated as exp(a_j - max a)
            let top = (0..support)
                .filter(|&j| occupied[j])
                .map(|j| inner[j])
                .fold(f64::NEG_INFINITY, f64::max);
            for j in (0..support).filter(|&j| occupied[j]) {
                mass[j] = (inner[j] - top).exp();
            }
        }
        Eq1Mode::SumNormalized => {
            for j in (0..support).filter(|&j| occupied[j]) {
                mass[j] = inner[j];
            }
        }
    }
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    Ok(SemanticDistribution { mass, condition })
}

/// Shannon entropy in nats; zero-mass entries contribute nothing.
pub fn entropy(dist: &SemanticDistribution) -> f64 {
    entropy_of(&dist.mass)
}

pub fn entropy_of(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    // a point mass gives -0.0; report it as 0
    h + 0.0
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Maps canonical cluster ids to joint-support slots for one case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSupport {
    slot_of: Vec<Option<usize>>,
    size: usize,
}

impl JointSupport {
    pub fn new(labeling: &ClusterLabeling, spans: Spans) -> Self {
        let mut present = vec![false; labeling.num_clusters];
        for i in spans.clean().chain(spans.noisy()) {
            present[labeling.ids[i]] = true;
        }
        let mut size = 0;
        let slot_of = present
            .into_iter()
            .map(|p| {
                p.then(|| {
                    size += 1;
                    size - 1
                })
            })
            .collect();
        Self { slot_of, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn slots(&self, labeling: &ClusterLabeling, range: std::ops::Range<usize>) -> Vec<usize> {
        range
            .map(|i| self.slot_of[labeling.ids[i]].expect("pool member is in the joint support"))
            .collect()
    }
}

fn check_coverage(case: &QuestionCase, labeling: &ClusterLabeling) -> Result<Spans> {
    let spans = Spans::new(case.n());
    if case.n() == 0 {
        return Err(HedgeError::EmptyPool);
    }
    if case.noisy.len() != case.n() {
        return Err(HedgeError::invalid_case(&case.id, "unbalanced pools"));
    }
    if labeling.len() != spans.len() || labeling.ids.iter().any(|&c| c >= labeling.num_clusters) {
        return Err(HedgeError::InvalidConfig(format!(
            "labeling of length {} does not cover case `{}` ({} responses)",
            labeling.len(),
            case.id,
            spans.len()
        )));
    }
    Ok(spans)
}

/// Clean and noisy distributions aligned on the joint support.
pub fn condition_distributions(
    case: &QuestionCase,
    labeling: &ClusterLabeling,
    mode: Eq1Mode,
) -> Result<(SemanticDistribution, SemanticDistribution)> {
    let spans = check_coverage(case, labeling)?;
    let joint = JointSupport::new(labeling, spans);
    let clean_lp: Vec<f64> = case.clean.iter().map(|a| a.mean_logprob).collect();
    let noisy_lp: Vec<f64> = case.noisy.iter().map(|a| a.mean_logprob).collect();
    let clean = semantic_distribution(
        &clean_lp,
        &joint.slots(labeling, spans.clean()),
        joint.size(),
        Condition::Clean,
        mode,
    )?;
    let noisy = semantic_distribution(
        &noisy_lp,
        &joint.slots(labeling, spans.noisy()),
        joint.size(),
        Condition::Noisy,
        mode,
    )?;
    Ok((clean, noisy))
}

pub fn se_score(case: &QuestionCase, labeling: &ClusterLabeling, mode: Eq1Mode) -> Result<f64> {
    let (clean, _) = condition_distributions(case, labeling, mode)?;
    Ok(entropy(&clean))
}

/// Fraction of clean answers whose cluster differs from the baseline's.
pub fn radflag_score(case: &QuestionCase, labeling: &ClusterLabeling) -> Result<f64> {
    let spans = check_coverage(case, labeling)?;
    let c0 = labeling.ids[spans.baseline()];
    let agree = spans.clean().filter(|&i| labeling.ids[i] == c0).count();
    Ok(1.0 - agree as f64 / spans.n() as f64)
}

pub fn vase_from(clean: &SemanticDistribution, noisy: &SemanticDistribution, alpha: f64) -> f64 {
    let amplified: Vec<f64> = clean
        .mass
        .iter()
        .zip(&noisy.mass)
        .map(|(c, n)| c + alpha * (c - n))
        .collect();
    entropy_of(&softmax(&amplified))
}

pub fn vase_score(case: &QuestionCase, labeling: &ClusterLabeling, alpha: f64, mode: Eq1Mode) -> Result<f64> {
    let (clean, noisy) = condition_distributions(case, labeling, mode)?;
    Ok(vase_from(&clean, &noisy, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub se: f64,
    pub radflag: f64,
    pub vase: f64,
    pub alpha: f64,
}

/// Score polarity: higher means more likely hallucinated, for all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Se,
    RadFlag,
    Vase,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Se, Metric::RadFlag, Metric::Vase];

    pub fn of(self, s: &MetricScores) -> f64 {
        match self {
            Metric::Se => s.se,
            Metric::RadFlag => s.radflag,
            Metric::Vase => s.vase,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Se => "se",
            Metric::RadFlag => "radflag",
            Metric::Vase => "vase",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = HedgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "se" => Ok(Metric::Se),
            "radflag" => Ok(Metric::RadFlag),
            "vase" => Ok(Metric::Vase),
            other => Err(HedgeError::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

/// All three scores for an already-clustered case.
pub fn score_labeled(
    case: &QuestionCase,
    labeling: &ClusterLabeling,
    alpha: f64,
    mode: Eq1Mode,
) -> Result<MetricScores> {
    let (clean, noisy) = condition_distributions(case, labeling, mode)?;
    Ok(MetricScores {
        se: entropy(&clean),
        radflag: radflag_score(case, labeling)?,
        vase: vase_from(&clean, &noisy, alpha),
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub mode: InputMode,
    pub strategy: Strategy,
    pub alpha: f64,
    pub eq1: Eq1Mode,
}

impl ScoringConfig {
    pub fn new(mode: InputMode, strategy: Strategy) -> Self {
        Self {
            mode,
            strategy,
            alpha: 1.0,
            eq1: Eq1Mode::Verbatim,
        }
    }
}

/// Assemble, cluster, and score one case.
pub fn score_case<E, J>(
    case: &QuestionCase,
    config: &ScoringConfig,
    embedder: &E,
    nli: &J,
) -> Result<(MetricScores, ClusterLabeling)>
where
    E: Embedder + ?Sized,
    J: EntailmentJudge + ?Sized,
{
    let seq = assemble_sequence(case, config.mode)?;
    let labeling = cluster_texts(&seq.texts, &config.strategy, embedder, nli)?;
    let scores = score_labeled(case, &labeling, config.alpha, config.eq1)?;
    Ok((scores, labeling))
}
