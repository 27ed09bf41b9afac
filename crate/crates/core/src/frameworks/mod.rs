//! Optimisation loops: surrogate pre-selection over composite DE and
//! surrogate-assisted selection over a histogram EDA with an archive.

mod sas;
mod sps;

pub use sas::{run_kan_sas, SasParams, SasWiring};
pub use sps::{run_kan_sps, SpsParams, SpsSelector};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::TrainingSet;
use crate::kan::KanError;
use crate::operators::OperatorError;
use crate::problems::{Benchmark, BudgetedProblem, InitMethod, ProblemError};
use crate::surrogate::{label_by_quantile, Backend, Surrogate, SurrogateConfig, SurrogateError, Task};

#[derive(Debug, Error)]
pub enum FrameworkError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Data(#[from] KanError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Solutions paired with their true objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPopulation {
    solutions: Array2<f64>,
    values: Vec<f64>,
}

impl EvaluatedPopulation {
    pub fn new(solutions: Array2<f64>, values: Vec<f64>) -> Result<Self, FrameworkError> {
        if solutions.nrows() != values.len() {
            return Err(FrameworkError::Config(format!(
                "{} solutions but {} values",
                solutions.nrows(),
                values.len()
            )));
        }
        if values.iter().chain(solutions.iter()).any(|v| !v.is_finite()) {
            return Err(FrameworkError::Config("population holds non-finite entries".into()));
        }
        Ok(Self { solutions, values })
    }

    pub fn solutions(&self) -> &Array2<f64> {
        &self.solutions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn replace(&mut self, i: usize, x: &[f64], value: f64) {
        self.solutions.row_mut(i).assign(&ndarray::ArrayView1::from(x));
        self.values[i] = value;
    }

    /// Training data: true values, or top-`fraction` labels.
    pub fn training_set(&self, task: Task, fraction: f64) -> Result<TrainingSet<f64>, FrameworkError> {
        training_set(self.solutions.clone(), self.values.clone(), task, fraction)
    }
}

fn training_set(x: Array2<f64>, y: Vec<f64>, task: Task, fraction: f64) -> Result<TrainingSet<f64>, FrameworkError> {
    Ok(match task {
        Task::Regression => TrainingSet::regression(x, y)?,
        Task::Classification => {
            let labels = label_by_quantile(&y, fraction);
            TrainingSet::classification(x, labels)?
        }
    })
}

/// Every evaluated solution, kept sorted ascending by value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    entries: Vec<(Vec<f64>, f64)>,
}

impl Archive {
    pub fn from_population(pop: &EvaluatedPopulation) -> Self {
        let mut a = Self::default();
        for (row, &v) in pop.solutions.rows().into_iter().zip(&pop.values) {
            a.insert(row.to_vec(), v);
        }
        a
    }

    /// Inserts after any entries with an equal value.
    pub fn insert(&mut self, x: Vec<f64>, value: f64) {
        let at = self.entries.partition_point(|e| e.1 <= value);
        self.entries.insert(at, (x, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Vec<f64>, f64)] {
        &self.entries
    }

    /// The best `k` entries (all of them when fewer exist).
    pub fn top(&self, k: usize) -> &[(Vec<f64>, f64)] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn top_population(&self, k: usize) -> Result<EvaluatedPopulation, FrameworkError> {
        let top = self.top(k);
        let rows: Vec<Vec<f64>> = top.iter().map(|e| e.0.clone()).collect();
        EvaluatedPopulation::new(crate::surrogate::rows_to_matrix(&rows), top.iter().map(|e| e.1).collect())
    }
}

/// Promising solutions that were never evaluated. They feed the
/// reproduction model only and never reach surrogate training.
#[derive(Debug, Clone, PartialEq)]
pub struct UnevaluatedPool {
    solutions: Array2<f64>,
}

impl UnevaluatedPool {
    pub fn new(solutions: Array2<f64>, capacity: usize) -> Result<Self, FrameworkError> {
        if solutions.nrows() > capacity {
            return Err(FrameworkError::Config(format!(
                "pool of {} exceeds capacity {capacity}",
                solutions.nrows()
            )));
        }
        Ok(Self { solutions })
    }

    pub fn empty(dim: usize) -> Self {
        Self { solutions: Array2::zeros((0, dim)) }
    }

    pub fn solutions(&self) -> &Array2<f64> {
        &self.solutions
    }

    pub fn len(&self) -> usize {
        self.solutions.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.nrows() == 0
    }
}

/// Where a loop ended up, with the per-evaluation best-so-far trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub best_solution: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<(usize, f64)>,
}

impl Trajectory {
    /// Built from the problem's own evaluation log.
    pub fn from_problem(problem: &BudgetedProblem) -> Self {
        let mut trace = Vec::with_capacity(problem.log().len());
        let mut best = f64::INFINITY;
        for &(fes, v) in problem.log() {
            best = best.min(v);
            trace.push((fes, best));
        }
        let (best_solution, best_value) = problem.best().map_or((Vec::new(), f64::INFINITY), |(x, v)| (x.to_vec(), v));
        Self { best_solution, best_value, trace }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "kan-sps-reg")]
    KanSpsReg,
    #[serde(rename = "kan-sps-cla")]
    KanSpsCla,
    #[serde(rename = "mlp-sps-reg")]
    MlpSpsReg,
    #[serde(rename = "mlp-sps-cla")]
    MlpSpsCla,
    #[serde(rename = "sps-random")]
    SpsRandom,
    #[serde(rename = "kan-sas-1")]
    KanSas1,
    #[serde(rename = "kan-sas-2")]
    KanSas2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::KanSpsReg,
        Algorithm::KanSpsCla,
        Algorithm::MlpSpsReg,
        Algorithm::MlpSpsCla,
        Algorithm::SpsRandom,
        Algorithm::KanSas1,
        Algorithm::KanSas2,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::KanSpsReg => "kan-sps-reg",
            Algorithm::KanSpsCla => "kan-sps-cla",
            Algorithm::MlpSpsReg => "mlp-sps-reg",
            Algorithm::MlpSpsCla => "mlp-sps-cla",
            Algorithm::SpsRandom => "sps-random",
            Algorithm::KanSas1 => "kan-sas-1",
            Algorithm::KanSas2 => "kan-sas-2",
        }
    }

    pub fn is_sas(self) -> bool {
        matches!(self, Algorithm::KanSas1 | Algorithm::KanSas2)
    }

    fn sps_selector(self) -> SpsSelector {
        match self {
            Algorithm::KanSpsReg => SpsSelector::Model(Backend::Kan, Task::Regression),
            Algorithm::KanSpsCla => SpsSelector::Model(Backend::Kan, Task::Classification),
            Algorithm::MlpSpsReg => SpsSelector::Model(Backend::Mlp, Task::Regression),
            Algorithm::MlpSpsCla => SpsSelector::Model(Backend::Mlp, Task::Classification),
            _ => SpsSelector::Random,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Everything that determines a run except the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub problem: Benchmark,
    pub n: usize,
    pub pop_size: usize,
    /// Trial vectors per member (pre-selection).
    pub trials: usize,
    /// Archive window used for training (archive selection).
    pub tau: usize,
    pub fes_max: usize,
    /// Histogram bins per coordinate (archive selection).
    pub bins: usize,
    /// L-BFGS iterations per surrogate fit.
    pub train_steps: usize,
    /// Exchange the two archive-selection wirings.
    pub swap_sas_variants: bool,
    pub init: InitMethod,
}

impl RunConfig {
    /// Defaults: population 50, 3 trials, window 50, 10 bins, 50 training
    /// steps; 2000 evaluations for pre-selection and 300 for archive selection.
    pub fn new(algorithm: Algorithm, problem: Benchmark, n: usize) -> Self {
        Self {
            algorithm,
            problem,
            n,
            pop_size: 50,
            trials: 3,
            tau: 50,
            fes_max: if algorithm.is_sas() { 300 } else { 2000 },
            bins: 10,
            train_steps: 50,
            swap_sas_variants: false,
            init: InitMethod::Uniform,
        }
    }

    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    fn surrogate_config(&self) -> SurrogateConfig {
        SurrogateConfig { steps: self.train_steps, ..SurrogateConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRecord {
    #[serde(flatten)]
    pub settings: RunConfig,
    pub fingerprint: String,
}

/// One finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub problem: Benchmark,
    pub n: usize,
    pub seed: u64,
    pub config: ConfigRecord,
    pub best_value: f64,
    pub best_solution: Vec<f64>,
    pub trace: Vec<(usize, f64)>,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

impl RunResult {
    pub fn fes_used(&self) -> usize {
        self.trace.last().map_or(0, |t| t.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Runs `config` from `seed` and packages the outcome.
pub fn execute(config: &RunConfig, seed: u64) -> Result<RunResult, FrameworkError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problem = BudgetedProblem::new(config.problem, config.n, config.fes_max)?;
    let traj = if config.algorithm.is_sas() {
        let wiring = match (config.algorithm, config.swap_sas_variants) {
            (Algorithm::KanSas1, false) | (Algorithm::KanSas2, true) => SasWiring::RegressionOnly,
            _ => SasWiring::RegressionAndClassification,
        };
        let params = SasParams {
            pop_size: config.pop_size,
            tau: config.tau,
            bins: config.bins,
            backend: Backend::Kan,
            wiring,
            surrogate: config.surrogate_config(),
            init: config.init,
        };
        run_kan_sas(&mut problem, &params, &mut rng)?
    } else {
        let params = SpsParams {
            pop_size: config.pop_size,
            trials: config.trials,
            selector: config.algorithm.sps_selector(),
            surrogate: config.surrogate_config(),
            init: config.init,
            code: Default::default(),
        };
        run_kan_sps(&mut problem, &params, &mut rng)?
    };
    Ok(RunResult {
        algorithm: config.algorithm,
        problem: config.problem,
        n: config.n,
        seed,
        config: ConfigRecord { settings: config.clone(), fingerprint: config.fingerprint() },
        best_value: traj.best_value,
        best_solution: traj.best_solution,
        trace: traj.trace,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Fits `surrogate`, keeping the last finite model if training diverges.
pub(crate) fn train(surrogate: &mut Surrogate<f64>, data: &TrainingSet<f64>, rng: &mut ChaCha8Rng) -> Result<(), FrameworkError> {
    match surrogate.fit(data, rng) {
        Ok(_) | Err(SurrogateError::Model(KanError::TrainingDiverged { .. })) => Ok(()),
        Err(e) => Err(e.into()),
    }
}

/// Evaluates `x`; `Ok(None)` once the budget is spent.
fn evaluate(problem: &mut BudgetedProblem, x: &[f64]) -> Result<Option<f64>, FrameworkError> {
    match problem.evaluate(x) {
        Ok(v) => Ok(Some(v)),
        Err(ProblemError::BudgetExhausted { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn initial_population(
    problem: &mut BudgetedProblem,
    size: usize,
    init: InitMethod,
    rng: &mut ChaCha8Rng,
) -> Result<EvaluatedPopulation, FrameworkError> {
    if problem.fes_max() <= size {
        return Err(FrameworkError::Config(format!(
            "budget {} must exceed the population size {size}",
            problem.fes_max()
        )));
    }
    let x = problem.initial_population(size, init, rng);
    let mut values = Vec::with_capacity(size);
    for row in x.rows() {
        values.push(problem.evaluate(&row.to_vec())?);
    }
    EvaluatedPopulation::new(x, values)
}

#[cfg(test)]
mod tests;
