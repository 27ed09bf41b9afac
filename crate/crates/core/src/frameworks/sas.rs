use ndarray::{concatenate, Axis};
use rand_chacha::ChaCha8Rng;

use super::{evaluate, initial_population, train, training_set, Archive, FrameworkError, Trajectory, UnevaluatedPool};
use crate::operators::{vwh_build, vwh_sample};
use crate::problems::{BudgetedProblem, InitMethod};
use crate::surrogate::{rows_to_matrix, Backend, Surrogate, SurrogateConfig, Task};

/// Share of the training window labelled promising for classification.
const SAS_LABEL_FRACTION: f64 = 0.3;

/// Which models pick the evaluated offspring and the unevaluated pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SasWiring {
    /// Regression picks both.
    RegressionOnly,
    /// Regression picks the evaluated offspring, classification the pool.
    RegressionAndClassification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SasParams {
    pub pop_size: usize,
    pub tau: usize,
    pub bins: usize,
    pub backend: Backend,
    pub wiring: SasWiring,
    pub surrogate: SurrogateConfig,
    pub init: InitMethod,
}

/// Surrogate-assisted selection with a histogram EDA and a sorted archive.
///
/// Each iteration trains on the best `tau` archive entries, samples
/// `pop_size` offspring from a histogram of the evaluated population plus
/// the unevaluated pool, evaluates only the model's favourite, and rebuilds
/// the pool from the next `pop_size / 2` candidates. The population is the
/// archive's top `pop_size` after every insertion.
pub fn run_kan_sas(
    problem: &mut BudgetedProblem,
    params: &SasParams,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, FrameworkError> {
    if params.pop_size < 2 || params.tau < 2 {
        return Err(FrameworkError::Config("population and training window need at least 2 entries".into()));
    }
    let pool_size = params.pop_size / 2;
    let mut pop = initial_population(problem, params.pop_size, params.init, rng)?;
    let mut archive = Archive::from_population(&pop);
    let mut pool = UnevaluatedPool::empty(problem.dim());
    let bounds = problem.bounds().clone();
    while !problem.is_exhausted() {
        let window = archive.top(params.tau);
        let x = rows_to_matrix(&window.iter().map(|e| e.0.clone()).collect::<Vec<_>>());
        let y: Vec<f64> = window.iter().map(|e| e.1).collect();

        let mut regressor = Surrogate::new(params.backend, Task::Regression, params.surrogate.clone());
        train(&mut regressor, &training_set(x.clone(), y.clone(), Task::Regression, 0.0)?, rng)?;
        let classifier = match params.wiring {
            SasWiring::RegressionOnly => None,
            SasWiring::RegressionAndClassification => {
                let mut c = Surrogate::new(params.backend, Task::Classification, params.surrogate.clone());
                train(&mut c, &training_set(x, y, Task::Classification, SAS_LABEL_FRACTION)?, rng)?;
                Some(c)
            }
        };

        let parents = concatenate(Axis(0), &[pop.solutions().view(), pool.solutions().view()])
            .map_err(|e| FrameworkError::Config(e.to_string()))?;
        let model = vwh_build(parents.view(), &bounds, params.bins)?;
        let offspring = vwh_sample(&model, params.pop_size, rng);

        let best = regressor.select_best(offspring.view(), rng)?;
        let rest: Vec<Vec<f64>> = offspring
            .rows()
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, r)| r.to_vec())
            .collect();
        let rest = rows_to_matrix(&rest);
        let chosen = match &classifier {
            Some(c) => c.select_top_k(rest.view(), pool_size)?,
            None => regressor.select_top_k(rest.view(), pool_size)?,
        };
        pool = UnevaluatedPool::new(rest.select(Axis(0), &chosen), pool_size)?;

        let o = offspring.row(best).to_vec();
        let Some(value) = evaluate(problem, &o)? else { break };
        archive.insert(o, value);
        pop = archive.top_population(params.pop_size)?;
    }
    Ok(Trajectory::from_problem(problem))
}
