//! `film`: ingest datasets, run experiments, train and apply IPIP models,
//! rebuild reports.
//!
//! Exit codes: 0 success, 1 run failure (including partially failed
//! experiments), 2 invalid input or configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use film_core::dataset::{load_csv, load_features_csv};
use film_core::experiment::{report_from_dir, run_experiment, write_reports, ExperimentConfig};
use film_core::ipip::{predict_ipip, train_ipip, IpipConfig, IpipModel};
use film_core::learners::{LearnerKind, LearnerParams, LearnerSpec};
use film_core::uic::GaussianParams;
use film_core::Error;

#[derive(Parser)]
#[command(name = "film", version, about = "Evaluate and train classifiers on class-imbalanced data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV and print a JSON summary of the dataset.
    Ingest(IngestArgs),
    /// Run the full experiment grid described by a config file.
    Experiment(ExperimentArgs),
    /// Train or apply an IPIP ensemble.
    #[command(subcommand)]
    Ipip(IpipCommand),
    /// Rebuild the reports of a finished experiment directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV file.
    csv: PathBuf,
    /// Name of the class column.
    #[arg(long)]
    target: String,
    /// Label of the positive (minority) class; defaults to the minority.
    #[arg(long)]
    positive_label: Option<String>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides FILM_SEED and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IpipCommand {
    /// Train an IPIP model and write it as JSON.
    Train(IpipTrainArgs),
    /// Predict with a trained IPIP model and write a CSV of labels and votes.
    Predict(IpipPredictArgs),
}

#[derive(Args)]
struct IpipTrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// IPIP config (JSON); missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base learner: logistic or random_forest.
    #[arg(long, default_value = "logistic")]
    learner: String,
    /// Base learner hyperparameter, repeatable: `--param max_depth=6`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    b_s: Option<usize>,
    #[arg(long)]
    b_e: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IpipPredictArgs {
    /// CSV with the model's feature columns (other columns are ignored).
    csv: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long)]
    jobs: Option<usize>,
    /// Predictions CSV to write; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment output directory holding records.json and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Gaussian height, overriding the recorded config.
    #[arg(long)]
    a: Option<f64>,
    /// Gaussian centre.
    #[arg(long)]
    b: Option<f64>,
    /// Gaussian width.
    #[arg(long)]
    c: Option<f64>,
}

enum Failure {
    Validation(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Experiment(a) => experiment(a),
        Command::Ipip(IpipCommand::Train(a)) => ipip_train(a),
        Command::Ipip(IpipCommand::Predict(a)) => ipip_predict(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn delimiter(c: char) -> Result<u8, Failure> {
    u8::try_from(c).map_err(|_| Failure::Validation(format!("delimiter `{c}` is not ASCII")))
}

fn set_threads(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Failure::Validation("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Run(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var("FILM_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Validation(format!("FILM_SEED `{s}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn json(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn ingest(a: IngestArgs) -> CmdResult {
    let (d, report) = load_csv(
        &a.data.csv,
        &a.data.target,
        a.data.positive_label.as_deref(),
        delimiter(a.data.delimiter)?,
    )?;
    let summary = serde_json::json!({
        "summary": d.summary(),
        "rows_read": report.rows_read,
        "rows_dropped": report.rows_dropped,
        "feature_names": d.feature_names(),
    });
    println!("{}", json(&summary));
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> CmdResult {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| Failure::Validation(e.to_string()))?;
    if let Some(s) = env_seed()? {
        cfg.seed = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(j) = a.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(o) = a.out {
        cfg.out = o;
    }
    // relative dataset paths are relative to the config file
    if cfg.dataset.path.is_relative() {
        if let Some(dir) = a.config.parent() {
            cfg.dataset.path = dir.join(&cfg.dataset.path);
        }
    }
    let outcome = run_experiment(&cfg)?;
    let failed = outcome.failed_cells();
    let summary = serde_json::json!({
        "out": cfg.out,
        "cells": outcome.manifest.cells.len(),
        "failed_cells": failed,
        "winner": outcome.reports.as_ref().map(|r| r.uic.winner.clone()),
    });
    println!("{}", json(&summary));
    if failed > 0 {
        eprintln!("error: {failed} cells failed; see manifest.json");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn learner_spec(kind: &str, params: &[String], seed: u64) -> Result<LearnerSpec, Failure> {
    let kind: LearnerKind = kind.parse()?;
    let mut p: LearnerParams = kind.default_params();
    for kv in params {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Validation(format!("--param `{kv}` is not NAME=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("--param `{kv}` has a non-numeric value")))?;
        p.set(k.trim(), v)?;
    }
    Ok(LearnerSpec::new(p, seed))
}

fn ipip_train(a: IpipTrainArgs) -> CmdResult {
    set_threads(a.jobs)?;
    let mut cfg = match &a.config {
        Some(p) => {
            let s = fs::read_to_string(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<IpipConfig>(&s).map_err(|e| Failure::Validation(e.to_string()))?
        }
        None => IpipConfig::default(),
    };
    if a.b_s.is_some() {
        cfg.b_s_override = a.b_s;
    }
    if a.b_e.is_some() {
        cfg.b_e_override = a.b_e;
    }
    cfg.validate()?;
    let seed = a.seed.or(env_seed()?).unwrap_or(0);
    let (d, _) = load_csv(
        &a.data.csv,
        &a.data.target,
        a.data.positive_label.as_deref(),
        delimiter(a.data.delimiter)?,
    )?;
    let spec = learner_spec(&a.learner, &a.params, seed)?;
    spec.params.validate(d.n_features())?;
    let model = train_ipip(&d, &spec, &cfg, seed)?;
    write_out(&a.out, &model.to_json()?)?;
    let summary = serde_json::json!({
        "model": a.out,
        "b_s": model.b_s,
        "b_e": model.b_e,
        "ensemble_sizes": model.ensemble_sizes(),
    });
    println!("{}", json(&summary));
    Ok(ExitCode::SUCCESS)
}

fn ipip_predict(a: IpipPredictArgs) -> CmdResult {
    set_threads(a.jobs)?;
    let text = fs::read_to_string(&a.model).map_err(|e| Failure::Validation(format!("{}: {e}", a.model.display())))?;
    let model = IpipModel::from_json(&text)?;
    let (x, rows) = load_features_csv(&a.csv, &model.schema, delimiter(a.delimiter)?)?;
    let pred = predict_ipip(&model, &x)?;
    let b_s = model.ensembles.len();
    let mut out = String::from("row_index,label,ensemble_votes,model_votes_per_ensemble\n");
    for (i, &row) in rows.iter().enumerate() {
        let label = if pred.labels[i].is_positive() {
            &model.positive_label
        } else {
            &model.negative_label
        };
        let per: Vec<String> = pred.model_votes[i]
            .iter()
            .zip(&model.ensembles)
            .map(|(v, e)| format!("{v}/{}", e.len()))
            .collect();
        out.push_str(&format!(
            "{row},{label},{}/{b_s},{}\n",
            pred.ensemble_votes[i],
            per.join(";")
        ));
    }
    match &a.out {
        Some(p) => write_out(p, &out)?,
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn report(a: ReportArgs) -> CmdResult {
    let gaussian = if a.a.is_some() || a.b.is_some() || a.c.is_some() {
        let manifest = a.out.join("manifest.json");
        let s = fs::read_to_string(&manifest).map_err(|e| Failure::Validation(format!("{}: {e}", manifest.display())))?;
        let v: serde_json::Value = serde_json::from_str(&s).map_err(|e| Failure::Validation(e.to_string()))?;
        let mut g: GaussianParams =
            serde_json::from_value(v["config"]["gaussian"].clone()).map_err(|e| Failure::Validation(e.to_string()))?;
        g.a = a.a.unwrap_or(g.a);
        g.b = a.b.unwrap_or(g.b);
        g.c = a.c.unwrap_or(g.c);
        Some(g)
    } else {
        None
    };
    let reports = report_from_dir(&a.out, gaussian)?;
    write_reports(&reports, &a.out)?;
    let summary = serde_json::json!({
        "out": a.out,
        "winner": reports.uic.winner,
        "gaussian": reports.uic.gaussian,
    });
    println!("{}", json(&summary));
    Ok(ExitCode::SUCCESS)
}
