//! Experiment management: multi-seed experiments, hyperparameter search
//! (grid and random), and variant benchmarking.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canon::to_canonical_string;
use crate::error::{Error, Result};
use crate::orchestrator::{load_config_value, run_training, EvalResult, RunContext};
use crate::rng::{derive_stream, SplitMix64, TAG_SEARCH};

/// One dimension of a hyperparameter search space: either an explicit value
/// list or a continuous range (optionally log-uniform).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SearchDomain {
    Values(Vec<serde_json::Value>),
    Range {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
}

/// Hyperparameter name -> domain. Names address fields of the config's
/// `hyperparameters` object.
pub type SearchSpace = BTreeMap<String, SearchDomain>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Grid,
    Random { samples: u64 },
}

fn validate_space(space: &SearchSpace) -> Result<()> {
    for (name, domain) in space {
        match domain {
            SearchDomain::Values(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "empty value list for `{name}`"
                    )));
                }
            }
            SearchDomain::Range { low, high, log } => {
                if !low.is_finite() || !high.is_finite() || low >= high {
                    return Err(Error::InvalidArgument(format!(
                        "range for `{name}` needs finite low < high"
                    )));
                }
                if *log && *low <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "log-uniform range for `{name}` needs low > 0"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// One assignment of search-space names to concrete values.
pub type Candidate = BTreeMap<String, serde_json::Value>;

/// Full cartesian product over the value lists. Names are enumerated in
/// lexicographic order with the last name varying fastest. Ranges cannot be
/// enumerated and are rejected.
pub fn grid_candidates(space: &SearchSpace) -> Result<Vec<Candidate>> {
    validate_space(space)?;
    let mut names = Vec::new();
    let mut lists = Vec::new();
    for (name, domain) in space {
        match domain {
            SearchDomain::Values(values) => {
                names.push(name.clone());
                lists.push(values.clone());
            }
            SearchDomain::Range { .. } => {
                return Err(Error::InvalidSpaceForGrid(name.clone()));
            }
        }
    }
    if names.is_empty() {
        return Ok(vec![Candidate::new()]);
    }
    let total: usize = lists.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut indices = vec![0usize; names.len()];
    loop {
        out.push(
            names
                .iter()
                .zip(&indices)
                .zip(&lists)
                .map(|((name, &i), list)| (name.clone(), list[i].clone()))
                .collect(),
        );
        // Odometer increment, rightmost digit fastest.
        let mut pos = names.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < lists[pos].len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// `n` independent draws from the space, reproducible from the seed. Value
/// lists are sampled uniformly; ranges are uniform or log-uniform.
pub fn random_candidates(space: &SearchSpace, n: u64, seed: u64) -> Result<Vec<Candidate>> {
    validate_space(space)?;
    let mut rng = SplitMix64::new(derive_stream(seed, TAG_SEARCH, 0));
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut candidate = Candidate::new();
        for (name, domain) in space {
            let value = match domain {
                SearchDomain::Values(values) => {
                    values[rng.gen_range(values.len() as u64) as usize].clone()
                }
                SearchDomain::Range { low, high, log } => {
                    let u = rng.next_f64();
                    let x = if *log {
                        (low.ln() + u * (high.ln() - low.ln())).exp()
                    } else {
                        low + u * (high - low)
                    };
                    serde_json::json!(x)
                }
            };
            candidate.insert(name.clone(), value);
        }
        out.push(candidate);
    }
    Ok(out)
}

/// Result of one seeded run inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedRun {
    pub seed: u64,
    pub run_id: String,
    pub global_step: u64,
    pub episode_count: u64,
    pub stop_reason: String,
    pub eval: EvalResult,
    pub log_path: String,
    pub checkpoint_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub label: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedRun>,
    /// Set when a seed failed; remaining seeds were skipped.
    pub aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

fn apply_seed(base: &serde_json::Value, seed: u64) -> Result<serde_json::Value> {
    let mut doc = base.clone();
    let obj = doc.as_object_mut().ok_or_else(|| Error::ConfigInvalid {
        path: "".into(),
        message: "config document must be a JSON object".into(),
    })?;
    obj.insert("seed".into(), serde_json::json!(seed));
    Ok(doc)
}

/// Runs the same configuration across seeds and writes a canonical
/// `report.json` manifest. A failing seed aborts the experiment; the
/// manifest records the partial results with `aborted: true`.
pub fn run_experiment(
    base: &serde_json::Value,
    seeds: &[u64],
    label: &str,
    out_dir: &Path,
) -> Result<ExperimentReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed required".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut report = ExperimentReport {
        label: label.to_string(),
        seeds: seeds.to_vec(),
        runs: Vec::new(),
        aborted: false,
        failure: None,
    };
    for &seed in seeds {
        let outcome = (|| -> Result<SeedRun> {
            let config = load_config_value(&apply_seed(base, seed)?)?;
            let run_id = format!("{label}-s{seed}");
            let ctx = RunContext {
                out_dir: out_dir.to_path_buf(),
                run_id: run_id.clone(),
                resume_from: None,
            };
            let result = run_training(&config, &ctx)?;
            Ok(SeedRun {
                seed,
                run_id,
                global_step: result.global_step,
                episode_count: result.episode_count,
                stop_reason: result.stop_reason.to_string(),
                eval: result.final_eval,
                log_path: result.log_path.display().to_string(),
                checkpoint_path: result.checkpoint_path.display().to_string(),
            })
        })();
        match outcome {
            Ok(run) => report.runs.push(run),
            Err(e) => {
                report.aborted = true;
                report.failure = Some(format!("seed {seed}: {e}"));
                break;
            }
        }
    }
    write_manifest(&report, &out_dir.join("report.json"))?;
    Ok(report)
}

fn write_manifest<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_value(value)
        .map_err(|e| Error::Persistence(format!("serialize manifest: {e}")))?;
    std::fs::write(path, to_canonical_string(&json) + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResult {
    pub index: usize,
    pub params: Candidate,
    /// Mean final-evaluation return across seeds; absent when the candidate
    /// failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub label: String,
    pub method: SearchMethod,
    pub candidates: Vec<CandidateResult>,
    /// Index of the best candidate (highest score, earliest on ties).
    pub best: usize,
}

fn apply_candidate(base: &serde_json::Value, candidate: &Candidate) -> Result<serde_json::Value> {
    let mut doc = base.clone();
    let obj = doc.as_object_mut().ok_or_else(|| Error::ConfigInvalid {
        path: "".into(),
        message: "config document must be a JSON object".into(),
    })?;
    let hp = obj
        .entry("hyperparameters")
        .or_insert_with(|| serde_json::json!({}));
    let hp_obj = hp.as_object_mut().ok_or_else(|| Error::ConfigInvalid {
        path: "hyperparameters".into(),
        message: "must be a JSON object".into(),
    })?;
    for (name, value) in candidate {
        hp_obj.insert(name.clone(), value.clone());
    }
    Ok(doc)
}

/// Hyperparameter search: every candidate is trained across all seeds and
/// scored by the mean final-evaluation return. Failed candidates are marked
/// and skipped in the argmax; if every candidate fails the whole search
/// fails.
pub fn tune(
    base: &serde_json::Value,
    space: &SearchSpace,
    method: &SearchMethod,
    seeds: &[u64],
    label: &str,
    out_dir: &Path,
) -> Result<TuneReport> {
    let base_seed = base.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
    let candidates = match method {
        SearchMethod::Grid => grid_candidates(space)?,
        SearchMethod::Random { samples } => random_candidates(space, *samples, base_seed)?,
    };
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to evaluate".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut results = Vec::with_capacity(candidates.len());
    for (index, candidate) in candidates.iter().enumerate() {
        let outcome = (|| -> Result<f64> {
            let doc = apply_candidate(base, candidate)?;
            let cand_label = format!("{label}-c{index}");
            let report =
                run_experiment(&doc, seeds, &cand_label, &out_dir.join(format!("c{index}")))?;
            if report.aborted {
                return Err(Error::InvalidArgument(
                    report.failure.unwrap_or_else(|| "run failed".into()),
                ));
            }
            let n = report.runs.len() as f64;
            Ok(report.runs.iter().map(|r| r.eval.mean_return).sum::<f64>() / n)
        })();
        results.push(match outcome {
            Ok(score) => CandidateResult {
                index,
                params: candidate.clone(),
                score: Some(score),
                error: None,
            },
            Err(e) => CandidateResult {
                index,
                params: candidate.clone(),
                score: None,
                error: Some(e.to_string()),
            },
        });
    }
    let best = results
        .iter()
        .filter_map(|r| r.score.map(|s| (r.index, s)))
        .fold(None::<(usize, f64)>, |acc, (i, s)| match acc {
            Some((_, best)) if best >= s => acc,
            _ => Some((i, s)),
        });
    let Some((best, _)) = best else {
        return Err(Error::TuneFailed(
            results
                .iter()
                .filter_map(|r| r.error.clone())
                .collect(),
        ));
    };
    let report = TuneReport {
        label: label.to_string(),
        method: method.clone(),
        candidates: results,
        best,
    };
    write_manifest(&report, &out_dir.join("tune_report.json"))?;
    Ok(report)
}

/// A named configuration overlay to compare against the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    pub overlay: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub label: String,
    /// Mean of final-evaluation returns across seeds.
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single seed.
    pub std: f64,
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub variants: Vec<VariantResult>,
}

/// Keys a benchmark overlay may touch.
const OVERLAY_KEYS: [&str; 3] = ["algorithm", "hyperparameters", "buffer"];

fn apply_overlay(
    base: &serde_json::Value,
    variant: &Variant,
) -> Result<serde_json::Value> {
    let overlay = variant
        .overlay
        .as_object()
        .ok_or_else(|| Error::InvalidVariant {
            label: variant.label.clone(),
            message: "overlay must be a JSON object".into(),
        })?;
    let mut doc = base.clone();
    let obj = doc.as_object_mut().ok_or_else(|| Error::ConfigInvalid {
        path: "".into(),
        message: "config document must be a JSON object".into(),
    })?;
    for (key, value) in overlay {
        if !OVERLAY_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidVariant {
                label: variant.label.clone(),
                message: format!(
                    "overlay key `{key}` not allowed; use one of {OVERLAY_KEYS:?}"
                ),
            });
        }
        match (obj.get_mut(key), value.as_object()) {
            // Field-wise merge for nested objects so an overlay can change
            // one hyperparameter without restating the rest.
            (Some(serde_json::Value::Object(existing)), Some(incoming)) => {
                for (k, v) in incoming {
                    existing.insert(k.clone(), v.clone());
                }
            }
            _ => {
                obj.insert(key.clone(), value.clone());
            }
        }
    }
    Ok(doc)
}

/// Trains every variant across all seeds and reports mean and sample
/// standard deviation of the final-evaluation return per variant.
pub fn benchmark(
    base: &serde_json::Value,
    variants: &[Variant],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<BenchmarkReport> {
    if variants.is_empty() {
        return Err(Error::InvalidArgument("at least one variant required".into()));
    }
    let mut labels: Vec<&str> = variants.iter().map(|v| v.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != variants.len() {
        return Err(Error::InvalidArgument("variant labels must be unique".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut results = Vec::with_capacity(variants.len());
    for variant in variants {
        let doc = apply_overlay(base, variant)?;
        let report = run_experiment(&doc, seeds, &variant.label, &out_dir.join(&variant.label))?;
        if report.aborted {
            return Err(Error::InvalidVariant {
                label: variant.label.clone(),
                message: report.failure.unwrap_or_else(|| "run failed".into()),
            });
        }
        let returns: Vec<f64> = report.runs.iter().map(|r| r.eval.mean_return).collect();
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let std = if returns.len() > 1 {
            (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        results.push(VariantResult {
            label: variant.label.clone(),
            mean,
            std,
            runs: returns.len() as u64,
        });
    }
    let report = BenchmarkReport { variants: results };
    write_manifest(&report, &out_dir.join("benchmark_report.json"))?;
    Ok(report)
}
