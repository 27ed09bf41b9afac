use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::frameworks::{execute, Algorithm, RunConfig, RunResult};
use crate::problems::{Benchmark, InitMethod};

/// A scalar or a list in a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn items(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_pop_size() -> usize {
    50
}
fn default_trials() -> usize {
    3
}
fn default_tau() -> usize {
    50
}
fn default_bins() -> usize {
    10
}
fn default_train_steps() -> usize {
    50
}
fn default_repetitions() -> usize {
    30
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// Repeated runs over every combination of algorithm, problem and `n`.
///
/// `fes_max` left unset picks each algorithm's own default budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: OneOrMany<Algorithm>,
    pub problem: OneOrMany<Benchmark>,
    pub n: OneOrMany<usize>,
    #[serde(default = "default_pop_size")]
    pub pop_size: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default)]
    pub fes_max: Option<usize>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_train_steps")]
    pub train_steps: usize,
    #[serde(default)]
    pub swap_sas_variants: bool,
    #[serde(default)]
    pub init: InitMethod,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; unset uses one per core.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults everywhere except the three grid axes.
    pub fn new(algorithm: OneOrMany<Algorithm>, problem: OneOrMany<Benchmark>, n: OneOrMany<usize>) -> Self {
        Self {
            algorithm,
            problem,
            n,
            pop_size: default_pop_size(),
            trials: default_trials(),
            tau: default_tau(),
            fes_max: None,
            bins: default_bins(),
            train_steps: default_train_steps(),
            swap_sas_variants: false,
            init: InitMethod::default(),
            repetitions: default_repetitions(),
            base_seed: 0,
            output_dir: default_output_dir(),
            workers: None,
        }
    }

    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(ExperimentError::io(path))?;
        let config: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetitions must be at least 1".into()));
        }
        if self.algorithm.items().is_empty() || self.problem.items().is_empty() || self.n.items().is_empty() {
            return Err(ExperimentError::Config("algorithm, problem and n need at least one entry".into()));
        }
        if self.n.items().contains(&0) {
            return Err(ExperimentError::Config("n must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(ExperimentError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// One run configuration per grid point, algorithms outermost.
    pub fn run_configs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for algorithm in self.algorithm.items() {
            for problem in self.problem.items() {
                for n in self.n.items() {
                    let base = RunConfig::new(algorithm, problem, n);
                    out.push(RunConfig {
                        pop_size: self.pop_size,
                        trials: self.trials,
                        tau: self.tau,
                        fes_max: self.fes_max.unwrap_or(base.fes_max),
                        bins: self.bins,
                        train_steps: self.train_steps,
                        swap_sas_variants: self.swap_sas_variants,
                        init: self.init,
                        ..base
                    });
                }
            }
        }
        out
    }

    pub fn seeds(&self) -> std::ops::Range<u64> {
        self.base_seed..self.base_seed + self.repetitions as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub computed: usize,
    pub skipped: usize,
    pub csv_path: PathBuf,
    /// In grid order, seeds innermost.
    pub results: Vec<RunResult>,
}

pub fn result_file_name(config: &RunConfig, seed: u64) -> String {
    format!("{}-{}-n{}-{}-s{seed}.json", config.algorithm.id(), config.problem.name(), config.n, config.fingerprint())
}

fn campaign_hash(runs: &[RunConfig], seeds: &std::ops::Range<u64>) -> String {
    let mut h = Sha256::new();
    for r in runs {
        h.update(r.fingerprint().as_bytes());
        h.update(b";");
    }
    h.update(format!("{}..{}", seeds.start, seeds.end).as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn ensure_writable(dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(ExperimentError::io(dir))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(ExperimentError::io(&probe))?;
    fs::remove_file(&probe).map_err(ExperimentError::io(&probe))
}

fn read_result(path: &Path) -> Result<RunResult, ExperimentError> {
    let text = fs::read_to_string(path).map_err(ExperimentError::io(path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Parse { line: e.line() as u64, message: format!("{}: {e}", path.display()) })
}

/// Runs or reuses one result file, returning the result and whether it was computed.
fn run_one(config: &RunConfig, seed: u64, dir: &Path) -> Result<(RunResult, bool), ExperimentError> {
    let path = dir.join(result_file_name(config, seed));
    if path.exists() {
        return Ok((read_result(&path)?, false));
    }
    let result = execute(config, seed)?;
    // write-then-rename so an interrupted campaign never leaves half a file
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, result.to_json()).map_err(ExperimentError::io(&tmp))?;
    fs::rename(&tmp, &path).map_err(ExperimentError::io(&path))?;
    Ok((result, true))
}

/// Executes every (grid point, seed) pair not already on disk, then writes
/// `campaign-<hash>.csv` covering all of them.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignSummary, ExperimentError> {
    config.validate()?;
    let dir = &config.output_dir;
    ensure_writable(dir)?;
    let runs = config.run_configs();
    let seeds = config.seeds();
    let tasks: Vec<(&RunConfig, u64)> = runs.iter().flat_map(|r| seeds.clone().map(move |s| (r, s))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let outcomes: Vec<(RunResult, bool)> =
        pool.install(|| tasks.par_iter().map(|&(r, s)| run_one(r, s, dir)).collect::<Result<_, _>>())?;

    let computed = outcomes.iter().filter(|o| o.1).count();
    let results: Vec<RunResult> = outcomes.into_iter().map(|o| o.0).collect();
    let csv_path = dir.join(format!("campaign-{}.csv", campaign_hash(&runs, &seeds)));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["problem", "n", "algorithm", "seed", "best_value", "fes_used"])?;
    for r in &results {
        w.write_record([
            r.problem.name().to_string(),
            r.n.to_string(),
            r.algorithm.id().to_string(),
            r.seed.to_string(),
            r.best_value.to_string(),
            r.fes_used().to_string(),
        ])?;
    }
    w.flush().map_err(ExperimentError::io(&csv_path))?;
    Ok(CampaignSummary { computed, skipped: results.len() - computed, csv_path, results })
}

/// Every `*.json` run result directly inside the given directories, sorted
/// by file name per directory.
pub fn load_results<P: AsRef<Path>>(dirs: &[P]) -> Result<Vec<RunResult>, ExperimentError> {
    let mut out = Vec::new();
    for dir in dirs {
        let dir = dir.as_ref();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(ExperimentError::io(dir))?
            .map(|e| e.map(|e| e.path()).map_err(ExperimentError::io(dir)))
            .collect::<Result<_, _>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        for p in paths {
            out.push(read_result(&p)?);
        }
    }
    Ok(out)
}
