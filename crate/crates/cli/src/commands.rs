use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hedge_core::dataset::{load_jsonl, load_valid, read_jsonl, validate_dataset, write_jsonl, ValidationReport};
use hedge_core::distortion::{distort, sample_spec, DistortionManifest, ImageBuffer, ManifestEntry};
use hedge_core::evaluation::{score_dataset, sweep_sampling_scale, tune_tau, SweepSettings, TuneResult, TuneSettings};
use hedge_core::{summarize, EvalReport, HedgeError, QuestionCase, ScoredCase, ScoringConfig, Strategy};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Clustering, DistortArgs, JudgeArgs, ReportArgs, ScoreArgs, SweepArgs, TauArg, ThresholdArgs, TuneArgs,
};
use crate::config::{hex_prefix, PoolSize, RunConfig};
use crate::error::{usage, CliError, CliResult};
use crate::judges::Judges;
use crate::output::{
    read_json, write_csv, write_json, write_report, PromptSweep, RunMeta, SweepFile, TuneFile, MANIFEST_FILE, RUN_FILE,
    SCORES_FILE, SWEEP_CSV, SWEEP_JSON, TUNE_CSV, TUNE_JSON,
};

/// What a command produced, for the caller to print.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub dir: Option<PathBuf>,
    pub summary: String,
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn validate(dataset: &Path) -> CliResult<(ValidationReport, Outcome)> {
    let cases = load_jsonl(dataset)?;
    let report = validate_dataset(&cases);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(first) = report.errors.first() {
        for e in &report.errors {
            eprintln!("error: {e}");
        }
        return Err(CliError::Validation(first.clone()));
    }
    let summary = format!(
        "{}: {} cases ok, {} warnings",
        dataset.display(),
        report.cases,
        report.warnings.len()
    );
    Ok((report, Outcome { dir: None, summary }))
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

/// Per-image seed, so adding images to the directory leaves existing variants untouched.
fn image_seed(seed: u64, name: &str) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(name.as_bytes());
    u64::from_str_radix(&hex_prefix(&bytes, 16), 16).expect("16 hex digits")
}

pub fn distort_images(args: &DistortArgs) -> CliResult<(DistortionManifest, Outcome)> {
    let mut images: Vec<PathBuf> = fs::read_dir(&args.images)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    images.retain(|p| p.is_file() && is_image(p));
    images.sort();
    fs::create_dir_all(&args.out)?;

    let jobs: Vec<(String, PathBuf, u64)> = images
        .iter()
        .flat_map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (0..args.n as u64).map(move |v| (name.clone(), p.clone(), v))
        })
        .collect();
    let entries = with_workers(args.workers, || {
        jobs.par_iter()
            .map(|(name, path, v)| {
                let spec = sample_spec(image_seed(args.seed, name), *v);
                let stem = Path::new(name).file_stem().unwrap().to_string_lossy();
                let output = format!("{stem}_v{v:03}.png");
                let img = ImageBuffer::load(path)?;
                distort(&img, &spec).save(&args.out.join(&output))?;
                Ok(ManifestEntry {
                    image: name.clone(),
                    variant_index: *v,
                    output,
                    spec,
                })
            })
            .collect::<Result<Vec<_>, HedgeError>>()
    })??;
    let manifest = DistortionManifest {
        seed: args.seed,
        variants_per_image: args.n,
        entries,
    };
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    let summary = format!("{} variants of {} images", manifest.entries.len(), images.len());
    Ok((
        manifest,
        Outcome {
            dir: Some(args.out.clone()),
            summary,
        },
    ))
}

fn tau_arg(threshold: &ThresholdArgs, clustering: Clustering) -> CliResult<Option<TauArg>> {
    match (clustering, threshold.tau) {
        (Clustering::Nli, _) => Ok(None),
        (_, None) => Err(usage("embedding clustering needs --tau (a value or `tune`)")),
        (_, Some(t)) => Ok(Some(t)),
    }
}

fn run_config(
    command: &str,
    dataset: &Path,
    clustering: Clustering,
    threshold: &ThresholdArgs,
    n: Option<PoolSize>,
    scoring: &crate::args::ScoringArgs,
    judges: &JudgeArgs,
) -> CliResult<RunConfig> {
    let config = RunConfig {
        command: command.into(),
        dataset_path: dataset.display().to_string(),
        mode: scoring.mode,
        clustering: clustering.as_str().into(),
        tau: tau_arg(threshold, clustering)?,
        tune_split: threshold.tune_split.as_ref().map(|p| p.display().to_string()),
        k: scoring.k,
        alpha: scoring.alpha,
        n,
        eq1_mode: scoring.eq1_mode,
        seed: judges.seed,
        judges: judges.judges,
        model: scoring.model.clone(),
        bridge_url: judges.bridge_url.clone(),
    };
    config.check()?;
    Ok(config)
}

/// Resolves the threshold, tuning it on the tune split when asked.
fn resolve_tau(
    config: &RunConfig,
    threshold: &ThresholdArgs,
    judges: &Judges,
) -> CliResult<(Option<f64>, Option<TuneResult>)> {
    match config.tau {
        None => Ok((None, None)),
        Some(TauArg::Fixed(t)) => Ok((Some(t), None)),
        Some(TauArg::Tune(_)) => {
            let split = threshold.tune_split.as_ref().expect("checked by RunConfig");
            if split == Path::new(&config.dataset_path) {
                eprintln!("warning: tuning and evaluating on the same file");
            }
            let cases = load_valid(split)?;
            let mut settings = TuneSettings::new(threshold.tune_metric, config.mode);
            settings.k = config.k;
            settings.alpha = config.alpha;
            settings.eq1 = config.eq1_mode;
            let result = tune_tau(&cases, &settings, &judges.embedder)?;
            Ok((Some(result.tau_star), Some(result)))
        }
    }
}

fn strategy(name: Clustering, tau: Option<f64>, k: Option<usize>) -> Strategy {
    match name {
        Clustering::Nli => Strategy::Nli,
        _ => Strategy::Embedding {
            tau: tau.expect("embedding strategy has a threshold"),
            k,
        },
    }
}

pub fn score(args: &ScoreArgs) -> CliResult<Outcome> {
    if args.clustering == Clustering::Both {
        return Err(usage("score takes one clustering strategy; use `hedge sweep` for both"));
    }
    let config = run_config(
        "score",
        &args.dataset,
        args.clustering,
        &args.threshold,
        args.n.map(PoolSize::Fixed),
        &args.scoring,
        &args.judges,
    )?;
    let mut cases = load_valid(&args.dataset)?;
    if let Some(n) = args.n {
        cases = cases.iter().map(|c| c.truncated(n)).collect::<Result<_, _>>()?;
    }
    let judges = Judges::build(config.judges, config.bridge_url.as_deref(), config.seed, &args.out)?;
    let start = Instant::now();
    let (tau, tune, scored) = with_workers(args.judges.workers, || -> CliResult<_> {
        let (tau, tune) = resolve_tau(&config, &args.threshold, &judges)?;
        let mut scoring = ScoringConfig::new(config.mode, strategy(args.clustering, tau, config.k));
        scoring.alpha = config.alpha;
        scoring.eq1 = config.eq1_mode;
        let scored = score_dataset(&cases, &scoring, &judges.embedder, &judges.nli)?;
        Ok((tau, tune, scored))
    })??;
    let runtime_ms = start.elapsed().as_millis() as u64;
    judges.persist()?;

    let dir = config.run_dir(&args.out);
    fs::create_dir_all(&dir)?;
    write_jsonl(&dir.join(SCORES_FILE), &scored)?;
    let meta = RunMeta {
        dataset: dataset_name(&args.dataset),
        model: config.model.clone(),
        mode: config.mode,
        clustering: config.clustering.clone(),
        tau,
        runtime_ms,
        judge_calls: judges.items(),
        config,
        tune,
    };
    write_json(&dir.join(RUN_FILE), &meta)?;
    let report = summarize(&[meta.into_record(scored)])?;
    write_report(&dir, &report)?;
    Ok(Outcome {
        summary: report_summary(&report),
        dir: Some(dir),
    })
}

fn report_summary(report: &EvalReport) -> String {
    report
        .rows
        .iter()
        .map(|r| {
            let auc = r.auc.map_or("undefined".to_string(), |a| format!("{a:.4}"));
            format!("{} {} {} {}: {auc}", r.prompt_config, r.clustering, r.mode, r.metric)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Serialize)]
struct LandscapeRow {
    tau: f64,
    auc: f64,
}

pub fn tune(args: &TuneArgs) -> CliResult<Outcome> {
    let threshold = ThresholdArgs {
        tau: Some(TauArg::Tune(crate::args::TuneTag::Tune)),
        tune_split: Some(args.dataset.clone()),
        tune_metric: args.metric,
    };
    let config = run_config(
        "tune",
        &args.dataset,
        Clustering::Embedding,
        &threshold,
        None,
        &args.scoring,
        &args.judges,
    )?;
    let cases = load_valid(&args.dataset)?;
    let judges = Judges::build(config.judges, config.bridge_url.as_deref(), config.seed, &args.out)?;
    let mut settings = TuneSettings::new(args.metric, config.mode);
    settings.k = config.k;
    settings.alpha = config.alpha;
    settings.eq1 = config.eq1_mode;
    settings.bounds = (args.tau_min, args.tau_max);
    settings.trials = args.trials;
    let result = with_workers(args.judges.workers, || tune_tau(&cases, &settings, &judges.embedder))??;
    judges.persist()?;

    let dir = config.run_dir(&args.out);
    fs::create_dir_all(&dir)?;
    let rows: Vec<LandscapeRow> = result
        .landscape
        .iter()
        .map(|&(tau, auc)| LandscapeRow { tau, auc })
        .collect();
    write_csv(&dir.join(TUNE_CSV), &rows)?;
    let summary = format!("tau* = {} (auc {:.4})", result.tau_star, result.auc_star);
    write_json(&dir.join(TUNE_JSON), &TuneFile { config, result })?;
    Ok(Outcome {
        dir: Some(dir),
        summary,
    })
}

pub fn sweep(args: &SweepArgs) -> CliResult<Outcome> {
    let config = run_config(
        "sweep",
        &args.dataset,
        args.clustering,
        &args.threshold,
        Some(PoolSize::Sweep(args.n_values.clone())),
        &args.scoring,
        &args.judges,
    )?;
    let cases = load_valid(&args.dataset)?;
    let judges = Judges::build(config.judges, config.bridge_url.as_deref(), config.seed, &args.out)?;
    let (tau, sweeps) = with_workers(args.judges.workers, || -> CliResult<_> {
        let (tau, _) = resolve_tau(&config, &args.threshold, &judges)?;
        let strategies = match args.clustering {
            Clustering::Both => vec![Strategy::Nli, strategy(Clustering::Embedding, tau, config.k)],
            one => vec![strategy(one, tau, config.k)],
        };
        let settings = SweepSettings {
            n_values: args.n_values.clone(),
            strategies,
            mode: config.mode,
            alpha: config.alpha,
            eq1: config.eq1_mode,
        };
        let mut by_prompt: BTreeMap<_, Vec<QuestionCase>> = BTreeMap::new();
        for c in &cases {
            by_prompt.entry(c.prompt_config).or_default().push(c.clone());
        }
        let sweeps = by_prompt
            .into_iter()
            .map(|(prompt_config, group)| {
                let result = sweep_sampling_scale(&group, &settings, &judges.embedder, &judges.nli)?;
                Ok(PromptSweep { prompt_config, result })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok((tau, sweeps))
    })??;
    judges.persist()?;

    let dir = config.run_dir(&args.out);
    fs::create_dir_all(&dir)?;
    let file = SweepFile { config, tau, sweeps };
    write_csv(&dir.join(SWEEP_CSV), &file.csv_rows())?;
    write_json(&dir.join(SWEEP_JSON), &file)?;
    Ok(Outcome {
        dir: Some(dir),
        summary: format!(
            "{} prompt configurations swept over {:?}",
            file.sweeps.len(),
            args.n_values
        ),
    })
}

/// Accepts a run directory or a `scores.jsonl` inside one.
fn run_dir_of(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

pub fn report(args: &ReportArgs) -> CliResult<Outcome> {
    let mut records = Vec::new();
    for path in &args.runs {
        let dir = run_dir_of(path);
        let meta_path = dir.join(RUN_FILE);
        if !meta_path.is_file() {
            return Err(usage(format!("{} has no {RUN_FILE} beside its scores", dir.display())));
        }
        let meta: RunMeta = read_json(&meta_path)?;
        let cases: Vec<ScoredCase> = read_jsonl(&dir.join(SCORES_FILE))?;
        records.push(meta.into_record(cases));
    }
    let report = summarize(&records)?;
    let key: Vec<String> = args.runs.iter().map(|p| p.display().to_string()).collect();
    let dir = args
        .out
        .join(format!("report-{}", hex_prefix(key.join("\n").as_bytes(), 12)));
    fs::create_dir_all(&dir)?;
    write_report(&dir, &report)?;
    Ok(Outcome {
        summary: format!("{} rows from {} runs", report.rows.len(), records.len()),
        dir: Some(dir),
    })
}
