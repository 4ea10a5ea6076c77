//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on configuration or
//! usage errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::{benchmark, tune, SearchMethod, SearchSpace, Variant};
use crate::monitoring::{summarize_file, summary_to_csv, summary_to_table};
use crate::orchestrator::{
    actor_snapshot, load_config_value, run_evaluation, run_training, ExperimentConfig,
    RunContext,
};
use crate::persistence::{load_checkpoint_file, LoadMode};

#[derive(Parser)]
#[command(name = "tabrl", version, about = "Tabular RL reference runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: ./runs/<unix-timestamp>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run label; the run id is `<label>-s<seed>`.
        #[arg(long, default_value = "run")]
        label: String,
    },
    /// Resume an interrupted run from its checkpoint.
    Resume {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        label: String,
    },
    /// Evaluate checkpointed tables greedily.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 5)]
        episodes: u64,
    },
    /// Hyperparameter search over a composite document
    /// {base, space, method, seeds, label}.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare variants over a composite document {base, variants, seeds}.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a JSONL metrics log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneDoc {
    base: serde_json::Value,
    space: SearchSpace,
    method: SearchMethod,
    seeds: Vec<u64>,
    #[serde(default = "default_label")]
    label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkDoc {
    base: serde_json::Value,
    variants: Vec<Variant>,
    seeds: Vec<u64>,
}

fn default_label() -> String {
    "tune".to_string()
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::ConfigSyntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn parse_doc<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    let de = serde_path_to_error::deserialize(&value);
    de.map_err(|e: serde_path_to_error::Error<serde_json::Error>| Error::ConfigInvalid {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn default_out() -> PathBuf {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    PathBuf::from("runs").join(stamp.to_string())
}

fn load_run_config(
    path: &Path,
    seed_override: Option<u64>,
) -> Result<ExperimentConfig> {
    let mut doc = read_json(path)?;
    if let (Some(seed), Some(obj)) = (seed_override, doc.as_object_mut()) {
        obj.insert("seed".into(), serde_json::json!(seed));
    }
    load_config_value(&doc)
}

fn run_train(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    label: &str,
    resume_from: Option<PathBuf>,
) -> Result<()> {
    let config = load_run_config(config_path, seed)?;
    let out_dir = out.unwrap_or_else(default_out);
    let run_id = format!("{label}-s{}", config.seed);
    let ctx = RunContext {
        out_dir,
        run_id,
        resume_from,
    };
    let result = run_training(&config, &ctx)?;
    println!(
        "run {} finished: {} steps, {} episodes, stopped by {}, eval mean return {:.6}",
        result.run_id,
        result.global_step,
        result.episode_count,
        result.stop_reason,
        result.final_eval.mean_return
    );
    println!("log: {}", result.log_path.display());
    println!("checkpoint: {}", result.checkpoint_path.display());
    Ok(())
}

fn run_eval(config_path: &Path, checkpoint: &Path, episodes: u64) -> Result<()> {
    let config = load_run_config(config_path, None)?;
    let state = load_checkpoint_file(checkpoint, LoadMode::Transfer, "")?;
    let snapshot = actor_snapshot(&state.tables, &config)?;
    let eval = run_evaluation(&config, &snapshot, episodes)?;
    println!(
        "eval over {} episodes: mean {:.6}, std {:.6}, min {:.6}, max {:.6}",
        eval.episodes, eval.mean_return, eval.std_return, eval.min_return, eval.max_return
    );
    Ok(())
}

fn run_tune(config_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let doc: TuneDoc = parse_doc(read_json(config_path)?)?;
    let out_dir = out.unwrap_or_else(default_out);
    let report = tune(
        &doc.base,
        &doc.space,
        &doc.method,
        &doc.seeds,
        &doc.label,
        &out_dir,
    )?;
    let best = &report.candidates[report.best];
    let params: BTreeMap<&String, String> = best
        .params
        .iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect();
    println!(
        "best candidate #{}: {:?} with score {:.6}",
        report.best,
        params,
        best.score.unwrap_or(f64::NAN)
    );
    println!("report: {}", out_dir.join("tune_report.json").display());
    Ok(())
}

fn run_benchmark(config_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let doc: BenchmarkDoc = parse_doc(read_json(config_path)?)?;
    let out_dir = out.unwrap_or_else(default_out);
    let report = benchmark(&doc.base, &doc.variants, &doc.seeds, &out_dir)?;
    for v in &report.variants {
        println!(
            "{}: mean return {:.6} +/- {:.6} over {} runs",
            v.label, v.mean, v.std, v.runs
        );
    }
    println!(
        "report: {}",
        out_dir.join("benchmark_report.json").display()
    );
    Ok(())
}

fn run_report(log: &Path, format: ReportFormat) -> Result<()> {
    let rows = summarize_file(log)?;
    match format {
        ReportFormat::Table => print!("{}", summary_to_table(&rows)),
        ReportFormat::Csv => print!("{}", summary_to_csv(&rows)),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            out,
            seed,
            label,
        } => run_train(&config, out, seed, &label, None),
        Command::Resume {
            config,
            checkpoint,
            out,
            seed,
            label,
        } => run_train(&config, out, seed, &label, Some(checkpoint)),
        Command::Eval {
            config,
            checkpoint,
            episodes,
        } => run_eval(&config, &checkpoint, episodes),
        Command::Tune { config, out } => run_tune(&config, out),
        Command::Benchmark { config, out } => run_benchmark(&config, out),
        Command::Report { log, format } => run_report(&log, format),
    }
}

/// Entry point shared by the binary and tests. Returns the process exit
/// code.
pub fn cli_main(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                1
            }
        }
    }
}
