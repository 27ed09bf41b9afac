use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{evaluate, initial_population, train, FrameworkError, Trajectory};
use crate::operators::{code_trials, CodeConfig};
use crate::problems::{BudgetedProblem, InitMethod};
use crate::surrogate::{Backend, Surrogate, SurrogateConfig, Task};

/// Share of the population labelled promising for classification.
const SPS_LABEL_FRACTION: f64 = 0.5;

/// How the one trial per member is chosen for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpsSelector {
    Model(Backend, Task),
    /// Uniform pick; the model-free baseline.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpsParams {
    pub pop_size: usize,
    pub trials: usize,
    pub selector: SpsSelector,
    pub surrogate: SurrogateConfig,
    pub init: InitMethod,
    pub code: CodeConfig,
}

/// Surrogate pre-selection with composite DE.
///
/// Each generation retrains the model on the current population, then for
/// every member generates `trials` candidates, evaluates the one the model
/// prefers and replaces the member on strict improvement. Replacement is in
/// place, so later members already see it. The run stops as soon as the
/// budget is spent, even mid-generation.
pub fn run_kan_sps(
    problem: &mut BudgetedProblem,
    params: &SpsParams,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory, FrameworkError> {
    let need = params.code.min_population();
    if params.pop_size < need {
        return Err(FrameworkError::Config(format!("population must have at least {need} members")));
    }
    if params.trials == 0 {
        return Err(FrameworkError::Config("trials must be at least 1".into()));
    }
    let mut pop = initial_population(problem, params.pop_size, params.init, rng)?;
    let bounds = problem.bounds().clone();
    'run: while !problem.is_exhausted() {
        let model = match params.selector {
            SpsSelector::Model(backend, task) => {
                let mut s = Surrogate::new(backend, task, params.surrogate.clone());
                train(&mut s, &pop.training_set(task, SPS_LABEL_FRACTION)?, rng)?;
                Some(s)
            }
            SpsSelector::Random => None,
        };
        for i in 0..pop.len() {
            let trials = code_trials(i, pop.solutions().view(), &bounds, params.trials, &params.code, rng)?;
            let pick = match &model {
                Some(s) => s.select_best(trials.view(), rng)?,
                None => rng.random_range(0..trials.nrows()),
            };
            let u = trials.row(pick).to_vec();
            let Some(value) = evaluate(problem, &u)? else { break 'run };
            if value < pop.values()[i] {
                pop.replace(i, &u, value);
            }
        }
    }
    Ok(Trajectory::from_problem(problem))
}
