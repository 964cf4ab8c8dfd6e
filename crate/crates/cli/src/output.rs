//! File formats written into run directories.

use std::fs;
use std::path::Path;

use hedge_core::evaluation::{EvalReport, RunRecord, ScoredCase, SweepResult, TuneResult};
use hedge_core::{InputMode, Metric, PromptConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const SCORES_FILE: &str = "scores.jsonl";
pub const RUN_FILE: &str = "run.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const TUNE_JSON: &str = "tune.json";
pub const TUNE_CSV: &str = "tune.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything about a scoring run except the per-case scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub dataset: String,
    pub model: String,
    pub mode: InputMode,
    pub clustering: String,
    pub tau: Option<f64>,
    pub runtime_ms: u64,
    pub judge_calls: u64,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneResult>,
}

impl RunMeta {
    pub fn into_record(self, cases: Vec<ScoredCase>) -> RunRecord {
        RunRecord {
            dataset: self.dataset,
            model: self.model,
            mode: self.mode,
            clustering: self.clustering,
            tau: self.tau,
            runtime_ms: self.runtime_ms,
            judge_calls: self.judge_calls,
            cases,
        }
    }
}

/// One line of the sweep CSV: AUC against pool size per metric, clustering and prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub metric: Metric,
    pub clustering: String,
    pub prompt_config: PromptConfig,
    pub mode: InputMode,
    pub n: usize,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSweep {
    pub prompt_config: PromptConfig,
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub config: RunConfig,
    pub tau: Option<f64>,
    pub sweeps: Vec<PromptSweep>,
}

impl SweepFile {
    pub fn csv_rows(&self) -> Vec<SweepCsvRow> {
        let mut out = Vec::new();
        for s in &self.sweeps {
            for row in &s.result.rows {
                for (&n, &auc) in s.result.axis.iter().zip(&row.aucs) {
                    out.push(SweepCsvRow {
                        metric: row.metric,
                        clustering: row.clustering.clone(),
                        prompt_config: s.prompt_config,
                        mode: self.config.mode,
                        n,
                        auc,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneFile {
    pub config: RunConfig,
    pub result: TuneResult,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(hedge_core::HedgeError::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text).map_err(hedge_core::HedgeError::from)?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &EvalReport) -> CliResult<()> {
    let mut json = report.to_json()?;
    json.push('\n');
    fs::write(dir.join(REPORT_JSON), json)?;
    if report.rows.is_empty() {
        // csv writes no header for zero records; keep the file self-describing
        fs::write(
            dir.join(REPORT_CSV),
            "dataset,model,prompt_config,mode,clustering,metric,auc,status,cases,tau,runtime_ms,judge_calls\n",
        )?;
        return Ok(());
    }
    write_csv(&dir.join(REPORT_CSV), &report.rows)
}
