//! ROC-AUC evaluation, threshold tuning and sampling-scale sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_similarities, pairwise_cosines, SimilarityMatrix, Strategy};
use crate::error::{HedgeError, Result};
use crate::judges::{embed_batch, Embedder, EntailmentJudge};
use crate::metrics::{score_case, score_labeled, Eq1Mode, Metric, MetricScores, ScoringConfig};
use crate::model::{assemble_sequence, InputMode, Label, PromptConfig, QuestionCase};

/// Sampling-scale axis `[1..10, 15, 20, 25, 30]`.
pub const DEFAULT_SWEEP_AXIS: [usize; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 30];

pub const TAU_BOUNDS: (f64, f64) = (0.8, 0.99);
pub const TAU_TRIALS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub case_id: String,
    pub score: f64,
    pub label: Label,
}

/// Mann-Whitney ROC-AUC with average ranks for ties:
/// `(sum of positive ranks - P(P+1)/2) / (P * N)`.
pub fn roc_auc(items: &[LabeledScore]) -> Result<f64> {
    if let Some(bad) = items.iter().find(|i| !i.score.is_finite()) {
        return Err(HedgeError::InvalidConfig(format!(
            "score for `{}` is not finite",
            bad.case_id
        )));
    }
    let positives = items.iter().filter(|i| i.label.is_positive()).count();
    let negatives = items.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(HedgeError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].score.total_cmp(&items[b].score));

    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && items[order[end]].score == items[order[start]].score {
            end += 1;
        }
        // ranks start..end (1-based: start+1 ..= end) share their mean
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end]
            .iter()
            .filter(|&&i| items[i].label.is_positive())
            .count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        start = end;
    }

    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// `trials` evenly spaced points from `lo` to `hi` inclusive.
pub fn tau_grid(lo: f64, hi: f64, trials: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) || trials == 0 {
        return Err(HedgeError::InvalidConfig(format!(
            "invalid tau search: [{lo}, {hi}] with {trials} trials"
        )));
    }
    if trials == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (trials - 1) as f64;
    Ok((0..trials)
        .map(|i| if i == trials - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// One scored case, as written to score files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCase {
    pub case_id: String,
    pub se: f64,
    pub radflag: f64,
    pub vase: f64,
    pub cluster_ids: Vec<usize>,
    pub label: Label,
    pub prompt_config: PromptConfig,
}

impl ScoredCase {
    pub fn new(case: &QuestionCase, scores: &MetricScores, cluster_ids: Vec<usize>) -> Self {
        Self {
            case_id: case.id.clone(),
            se: scores.se,
            radflag: scores.radflag,
            vase: scores.vase,
            cluster_ids,
            label: case.label,
            prompt_config: case.prompt_config,
        }
    }

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Se => self.se,
            Metric::RadFlag => self.radflag,
            Metric::Vase => self.vase,
        }
    }
}

pub fn labeled_scores<'a>(cases: impl IntoIterator<Item = &'a ScoredCase>, metric: Metric) -> Vec<LabeledScore> {
    cases
        .into_iter()
        .map(|c| LabeledScore {
            case_id: c.case_id.clone(),
            score: c.metric(metric),
            label: c.label,
        })
        .collect()
}

/// AUC for `metric`, `None` when the labels are single-class.
pub fn metric_auc<'a>(cases: impl IntoIterator<Item = &'a ScoredCase>, metric: Metric) -> Result<Option<f64>> {
    match roc_auc(&labeled_scores(cases, metric)) {
        Ok(v) => Ok(Some(v)),
        Err(HedgeError::DegenerateLabels) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scores every case in parallel; output order follows the input.
pub fn score_dataset<E, J>(
    dataset: &[QuestionCase],
    config: &ScoringConfig,
    embedder: &E,
    nli: &J,
) -> Result<Vec<ScoredCase>>
where
    E: Embedder + ?Sized,
    J: EntailmentJudge + ?Sized,
{
    dataset
        .par_iter()
        .map(|case| {
            let (scores, labeling) = score_case(case, config, embedder, nli)?;
            Ok(ScoredCase::new(case, &scores, labeling.ids))
        })
        .collect()
}

fn require_both_labels(dataset: &[QuestionCase]) -> Result<()> {
    let pos = dataset.iter().filter(|c| c.label.is_positive()).count();
    if pos == 0 || pos == dataset.len() {
        return Err(HedgeError::DegenerateLabels);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSettings {
    pub metric: Metric,
    pub mode: InputMode,
    pub k: Option<usize>,
    pub alpha: f64,
    pub eq1: Eq1Mode,
    pub bounds: (f64, f64),
    pub trials: usize,
}

impl TuneSettings {
    pub fn new(metric: Metric, mode: InputMode) -> Self {
        Self {
            metric,
            mode,
            k: None,
            alpha: 1.0,
            eq1: Eq1Mode::Verbatim,
            bounds: TAU_BOUNDS,
            trials: TAU_TRIALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub tau_star: f64,
    pub auc_star: f64,
    /// `(tau, auc)` for every grid point, in grid order.
    pub landscape: Vec<(f64, f64)>,
}

/// Grid search for the embedding threshold maximizing ROC-AUC; ties go to
/// the smaller `tau`. Each case is embedded once and re-clustered per point.
pub fn tune_tau<E: Embedder + ?Sized>(
    dataset: &[QuestionCase],
    settings: &TuneSettings,
    embedder: &E,
) -> Result<TuneResult> {
    require_both_labels(dataset)?;
    let grid = tau_grid(settings.bounds.0, settings.bounds.1, settings.trials)?;
    let prepared: Vec<SimilarityMatrix> = dataset
        .par_iter()
        .map(|case| {
            let seq = assemble_sequence(case, settings.mode)?;
            Ok(pairwise_cosines(&embed_batch(&seq.texts, embedder)?))
        })
        .collect::<Result<_>>()?;

    let mut landscape = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &tau in &grid {
        let items = dataset
            .par_iter()
            .zip(&prepared)
            .map(|(case, sims)| {
                let labeling = cluster_similarities(sims, tau, settings.k)?;
                let scores = score_labeled(case, &labeling, settings.alpha, settings.eq1)?;
                Ok(LabeledScore {
                    case_id: case.id.clone(),
                    score: settings.metric.of(&scores),
                    label: case.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let auc = roc_auc(&items)?;
        landscape.push((tau, auc));
        if best.is_none_or(|(_, b)| auc > b) {
            best = Some((tau, auc));
        }
    }
    let (tau_star, auc_star) = best.expect("grid is non-empty");
    Ok(TuneResult {
        tau_star,
        auc_star,
        landscape,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub metric: Metric,
    pub clustering: String,
    /// One entry per axis value; `None` where AUC is undefined.
    pub aucs: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub n_values: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub mode: InputMode,
    pub alpha: f64,
    pub eq1: Eq1Mode,
}

/// For every `n`, truncates both pools to their first `n` answers, re-clusters,
/// re-scores and records the AUC of each metric under each strategy.
pub fn sweep_sampling_scale<E, J>(
    dataset: &[QuestionCase],
    settings: &SweepSettings,
    embedder: &E,
    nli: &J,
) -> Result<SweepResult>
where
    E: Embedder + ?Sized,
    J: EntailmentJudge + ?Sized,
{
    if settings.n_values.is_empty() || settings.n_values.contains(&0) {
        return Err(HedgeError::InvalidConfig("sweep axis must hold positive sizes".into()));
    }
    let need = *settings.n_values.iter().max().expect("non-empty axis");
    for case in dataset {
        let have = case.clean.len().min(case.noisy.len());
        if have < need {
            return Err(HedgeError::InsufficientSamples {
                case_id: case.id.clone(),
                need,
                have,
            });
        }
    }

    let mut rows = Vec::new();
    for strategy in &settings.strategies {
        let config = ScoringConfig {
            mode: settings.mode,
            strategy: *strategy,
            alpha: settings.alpha,
            eq1: settings.eq1,
        };
        let mut per_metric: BTreeMap<Metric, Vec<Option<f64>>> = BTreeMap::new();
        for &n in &settings.n_values {
            let truncated = dataset.iter().map(|c| c.truncated(n)).collect::<Result<Vec<_>>>()?;
            let scored = score_dataset(&truncated, &config, embedder, nli)?;
            for metric in Metric::ALL {
                per_metric.entry(metric).or_default().push(metric_auc(&scored, metric)?);
            }
        }
        rows.extend(per_metric.into_iter().map(|(metric, aucs)| SweepRow {
            metric,
            clustering: strategy.name().to_string(),
            aucs,
        }));
    }
    Ok(SweepResult {
        axis: settings.n_values.clone(),
        rows,
    })
}

/// Metadata and per-case scores of one scoring run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub model: String,
    pub mode: InputMode,
    pub clustering: String,
    pub tau: Option<f64>,
    pub runtime_ms: u64,
    pub judge_calls: u64,
    pub cases: Vec<ScoredCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AucStatus {
    Ok,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub model: String,
    pub prompt_config: PromptConfig,
    pub mode: InputMode,
    pub clustering: String,
    pub metric: Metric,
    pub auc: Option<f64>,
    pub status: AucStatus,
    pub cases: usize,
    pub tau: Option<f64>,
    pub runtime_ms: u64,
    pub judge_calls: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// One row per (dataset, model, prompt config, mode, clustering, metric).
pub fn summarize(results: &[RunRecord]) -> Result<EvalReport> {
    let mut rows = Vec::new();
    for run in results {
        let mut by_prompt: BTreeMap<PromptConfig, Vec<&ScoredCase>> = BTreeMap::new();
        for c in &run.cases {
            by_prompt.entry(c.prompt_config).or_default().push(c);
        }
        for (prompt_config, cases) in by_prompt {
            for metric in Metric::ALL {
                let auc = metric_auc(cases.iter().copied(), metric)?;
                rows.push(ReportRow {
                    dataset: run.dataset.clone(),
                    model: run.model.clone(),
                    prompt_config,
                    mode: run.mode,
                    clustering: run.clustering.clone(),
                    metric,
                    auc,
                    status: if auc.is_some() {
                        AucStatus::Ok
                    } else {
                        AucStatus::Undefined
                    },
                    cases: cases.len(),
                    tau: run.tau,
                    runtime_ms: run.runtime_ms,
                    judge_calls: run.judge_calls,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.dataset, &a.model, a.prompt_config, a.mode, &a.clustering, a.metric).cmp(&(
            &b.dataset,
            &b.model,
            b.prompt_config,
            b.mode,
            &b.clustering,
            b.metric,
        ))
    });
    Ok(EvalReport { rows })
}
