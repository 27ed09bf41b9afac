//! Surrogate models: a uniform fit/predict/select interface over the KAN
//! and MLP backends, plus the quantile labelling used by the classifiers.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Standardizer, TrainingSet};
use crate::kan::{KanConfig, KanError, KanNetwork};
use crate::mlp::Mlp;
use crate::model::{fit, FitReport, Head, Trainable};
use crate::optim::LbfgsConfig;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("surrogate used before it was fitted")]
    NotFitted,
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("candidate dimension {got} does not match model dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("requested {k} candidates from a set of {available}")]
    Size { k: usize, available: usize },
    #[error("training targets do not match the surrogate task")]
    TaskMismatch,
    #[error("R² undefined: true values have zero variance")]
    UndefinedScore,
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error(transparent)]
    Model(#[from] KanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Kan,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn head(self) -> Head {
        match self {
            Task::Regression => Head::RegressionScalar,
            Task::Classification => Head::ClassificationSoftmax2,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Kan => "kan",
            Backend::Mlp => "mlp",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kan" => Ok(Backend::Kan),
            "mlp" => Ok(Backend::Mlp),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// L-BFGS iterations per fit.
    pub steps: usize,
    pub kan: KanConfig,
    #[serde(skip)]
    pub lbfgs: LbfgsConfig,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { steps: 50, kan: KanConfig::default(), lbfgs: LbfgsConfig::default() }
    }
}

#[derive(Debug, Clone)]
enum Network<T> {
    Kan(KanNetwork<T>),
    Mlp(Mlp<T>),
}

impl<T: Scalar> Network<T> {
    fn forward(&self, x: &[T]) -> Result<Vec<T>, KanError> {
        match self {
            Network::Kan(n) => n.forward(x),
            Network::Mlp(n) => n.forward(x),
        }
    }

    fn fit(&mut self, data: &TrainingSet<T>, steps: usize, cfg: &SurrogateConfig) -> Result<FitReport<T>, KanError> {
        match self {
            Network::Kan(n) => fit(n, data, steps, &cfg.lbfgs),
            Network::Mlp(n) => fit(n, data, steps, &cfg.lbfgs),
        }
    }
}

#[derive(Debug, Clone)]
struct Fitted<T> {
    network: Network<T>,
    inputs: Standardizer<T>,
    /// Present for regression only.
    targets: Option<Standardizer<T>>,
    dim: usize,
}

/// A regression or classification model over solution vectors.
///
/// Inputs are standardized per dimension and regression targets are
/// standardized before training; predictions are mapped back to the
/// original target scale.
#[derive(Debug, Clone)]
pub struct Surrogate<T> {
    backend: Backend,
    task: Task,
    config: SurrogateConfig,
    state: Option<Fitted<T>>,
}

impl<T: Scalar> Surrogate<T> {
    pub fn new(backend: Backend, task: Task, config: SurrogateConfig) -> Self {
        Self { backend, task, config, state: None }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn is_fitted(&self) -> bool {
        self.state.is_some()
    }

    /// Trains a fresh `[n, 2n + 1, out]` network on `data`.
    ///
    /// If training diverges the surrogate keeps the last parameters with a
    /// finite loss, stays usable, and the error is returned.
    pub fn fit<R: Rng + ?Sized>(&mut self, data: &TrainingSet<T>, rng: &mut R) -> Result<FitReport<T>, SurrogateError> {
        let head = self.task.head();
        let (train, target_scaler) = match (self.task, data.targets()) {
            (Task::Regression, crate::data::Targets::Values(y)) => {
                let ts = Standardizer::fit_values(y);
                let z: Vec<T> = y.iter().map(|&v| ts.transform_value(v)).collect();
                (Some(z), Some(ts))
            }
            (Task::Classification, crate::data::Targets::Labels(_)) => (None, None),
            _ => return Err(SurrogateError::TaskMismatch),
        };
        let input_scaler = Standardizer::fit(data.inputs());
        let x = input_scaler.transform(data.inputs());
        let scaled = match train {
            Some(z) => TrainingSet::regression(x.clone(), z)?,
            None => TrainingSet::new(x.clone(), data.targets().clone())?,
        };
        let n = data.dim();
        let mut network = match self.backend {
            Backend::Kan => {
                let shape = KanNetwork::<T>::default_shape(n, head);
                Network::Kan(KanNetwork::from_data(&shape, head, &x, &self.config.kan, rng)?)
            }
            Backend::Mlp => Network::Mlp(Mlp::with_default_shape(n, head, rng)?),
        };
        let result = network.fit(&scaled, self.config.steps, &self.config);
        self.state = Some(Fitted { network, inputs: input_scaler, targets: target_scaler, dim: n });
        result.map_err(SurrogateError::from)
    }

    fn fitted(&self, candidates: &ArrayView2<T>) -> Result<&Fitted<T>, SurrogateError> {
        let state = self.state.as_ref().ok_or(SurrogateError::NotFitted)?;
        if candidates.nrows() == 0 {
            return Err(SurrogateError::EmptyCandidates);
        }
        if candidates.ncols() != state.dim {
            return Err(SurrogateError::Dimension { expected: state.dim, got: candidates.ncols() });
        }
        Ok(state)
    }

    fn outputs(&self, candidates: &ArrayView2<T>) -> Result<Vec<Vec<T>>, SurrogateError> {
        let state = self.fitted(candidates)?;
        candidates
            .rows()
            .into_iter()
            .map(|r| {
                let z = state.inputs.transform_row(&r.to_vec());
                state.network.forward(&z).map_err(SurrogateError::from)
            })
            .collect()
    }

    /// Predicted objective values, one per candidate row.
    pub fn predict_values(&self, candidates: ArrayView2<T>) -> Result<Vec<T>, SurrogateError> {
        if self.task != Task::Regression {
            return Err(SurrogateError::TaskMismatch);
        }
        let out = self.outputs(&candidates)?;
        let ts = self.state.as_ref().and_then(|s| s.targets.as_ref()).ok_or(SurrogateError::NotFitted)?;
        Ok(out.into_iter().map(|o| ts.inverse_value(o[0])).collect())
    }

    /// Labels (1 iff P(class 1) ≥ 0.5) and class-1 probabilities.
    pub fn predict_labels(&self, candidates: ArrayView2<T>) -> Result<(Vec<u8>, Vec<T>), SurrogateError> {
        if self.task != Task::Classification {
            return Err(SurrogateError::TaskMismatch);
        }
        let probs: Vec<T> = self.outputs(&candidates)?.into_iter().map(|p| p[1]).collect();
        Ok((labels_from_probabilities(&probs), probs))
    }

    /// Minimum prediction (regression) or a uniformly random label-1
    /// candidate, falling back to any candidate (classification).
    pub fn select_best<R: Rng + ?Sized>(&self, candidates: ArrayView2<T>, rng: &mut R) -> Result<usize, SurrogateError> {
        match self.task {
            Task::Regression => Ok(argmin(&self.predict_values(candidates)?)),
            Task::Classification => {
                let (labels, _) = self.predict_labels(candidates)?;
                Ok(pick_label_one(&labels, rng))
            }
        }
    }

    /// `k` indices: smallest predictions ascending (regression), or label-1
    /// candidates by descending probability padded with the most probable
    /// label-0 candidates (classification).
    pub fn select_top_k(&self, candidates: ArrayView2<T>, k: usize) -> Result<Vec<usize>, SurrogateError> {
        if k > candidates.nrows() {
            return Err(SurrogateError::Size { k, available: candidates.nrows() });
        }
        let mut order: Vec<usize> = (0..candidates.nrows()).collect();
        match self.task {
            Task::Regression => {
                let pred = self.predict_values(candidates)?;
                order.sort_by(|&a, &b| pred[a].partial_cmp(&pred[b]).unwrap_or(std::cmp::Ordering::Equal));
            }
            Task::Classification => {
                // label 1 iff p >= 0.5, so descending probability already
                // puts every label-1 candidate ahead of the label-0 padding
                let (_, probs) = self.predict_labels(candidates)?;
                order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap_or(std::cmp::Ordering::Equal));
            }
        }
        order.truncate(k);
        Ok(order)
    }
}

/// Builds and trains a surrogate in one step.
pub fn fit_surrogate<T: Scalar, R: Rng + ?Sized>(
    backend: Backend,
    task: Task,
    data: &TrainingSet<T>,
    config: &SurrogateConfig,
    rng: &mut R,
) -> Result<Surrogate<T>, SurrogateError> {
    let mut s = Surrogate::new(backend, task, config.clone());
    s.fit(data, rng)?;
    Ok(s)
}

pub fn labels_from_probabilities<T: Scalar>(probs: &[T]) -> Vec<u8> {
    let half = T::lit(0.5);
    probs.iter().map(|&p| u8::from(p >= half)).collect()
}

/// First index of the minimum; NaN never wins.
pub fn argmin<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

/// Uniform pick among label-1 entries, or among all entries when none is 1.
pub fn pick_label_one<R: Rng + ?Sized>(labels: &[u8], rng: &mut R) -> usize {
    let ones: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == 1).map(|(i, _)| i).collect();
    if ones.is_empty() {
        rng.random_range(0..labels.len())
    } else {
        ones[rng.random_range(0..ones.len())]
    }
}

/// Labels the `ceil(top_fraction · N)` smallest values as 1 (minimisation);
/// ties at the cutoff go to the earlier index.
pub fn label_by_quantile<T: Scalar>(values: &[T], top_fraction: f64) -> Vec<u8> {
    let n = values.len();
    // guard against 0.3 * 10 = 3.0000000000000004
    let count = ((top_fraction * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut labels = vec![0u8; n];
    for &i in &order[..count] {
        labels[i] = 1;
    }
    labels
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2_score<T: Scalar>(y_true: &[T], y_pred: &[T]) -> Result<T, SurrogateError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(SurrogateError::Length(y_true.len(), y_pred.len()));
    }
    let mean = y_true.iter().copied().sum::<T>() / T::from_usize_lossy(y_true.len());
    let ss_tot: T = y_true.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if ss_tot == T::zero() {
        return Err(SurrogateError::UndefinedScore);
    }
    let ss_res: T = y_true.iter().zip(y_pred).map(|(&y, &p)| (y - p) * (y - p)).sum();
    Ok(T::one() - ss_res / ss_tot)
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy(a: &[u8], b: &[u8]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

/// Stacks row vectors into a matrix.
pub fn rows_to_matrix<T: Scalar>(rows: &[Vec<T>]) -> Array2<T> {
    let n = rows.first().map_or(0, Vec::len);
    Array2::from_shape_fn((rows.len(), n), |(i, j)| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Benchmark;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ellipsoid_set(samples: usize, seed: u64) -> TrainingSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((samples, 2), |_| rng.random_range(-5.12..5.12));
        let y = x.rows().into_iter().map(|r| Benchmark::Ellipsoid.eval(&r.to_vec()).unwrap()).collect();
        TrainingSet::regression(x, y).unwrap()
    }

    #[test]
    fn quantile_labels() {
        assert_eq!(label_by_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), vec![1, 1, 0, 0]);
        let v = [5.0, 1.0, 4.0, 2.0, 3.0, 9.0, 8.0, 7.0, 6.0, 0.0];
        let l = label_by_quantile(&v, 0.3);
        let ones: Vec<usize> = (0..10).filter(|&i| l[i] == 1).collect();
        assert_eq!(ones, vec![1, 3, 9]);
        assert_eq!(label_by_quantile(&[42.0], 0.3), vec![1]);
        // cutoff tie: earlier index wins
        assert_eq!(label_by_quantile(&[1.0, 2.0, 2.0, 3.0], 0.5), vec![1, 1, 0, 0]);
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.5f64).abs() < 1e-15);
        assert_eq!(r2_score(&[2.0, 2.0], &[1.0, 2.0]), Err(SurrogateError::UndefinedScore));
    }

    #[test]
    fn predict_before_fit_is_rejected() {
        let s = Surrogate::<f64>::new(Backend::Kan, Task::Regression, SurrogateConfig::default());
        let u = Array2::zeros((3, 2));
        assert_eq!(s.predict_values(u.view()), Err(SurrogateError::NotFitted));
        let s = Surrogate::<f64>::new(Backend::Mlp, Task::Classification, SurrogateConfig::default());
        assert_eq!(s.predict_labels(u.view()).unwrap_err(), SurrogateError::NotFitted);
    }

    #[test]
    fn kan_regression_fits_ellipsoid() {
        let d = ellipsoid_set(50, 1);
        let s = fit_surrogate(Backend::Kan, Task::Regression, &d, &SurrogateConfig::default(), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        let pred = s.predict_values(d.inputs().view()).unwrap();
        let crate::data::Targets::Values(y) = d.targets() else { unreachable!() };
        let r2 = r2_score(y, &pred).unwrap();
        assert!(r2 > 0.9, "training R² {r2}");
    }

    #[test]
    fn classification_predicts_both_classes() {
        let d = ellipsoid_set(50, 3);
        let crate::data::Targets::Values(y) = d.targets() else { unreachable!() };
        let labels = label_by_quantile(y, 0.5);
        let d = TrainingSet::classification(d.inputs().clone(), labels).unwrap();
        for backend in [Backend::Kan, Backend::Mlp] {
            let s = fit_surrogate(backend, Task::Classification, &d, &SurrogateConfig::default(), &mut ChaCha8Rng::seed_from_u64(4))
                .unwrap();
            let (l, p) = s.predict_labels(d.inputs().view()).unwrap();
            assert!(l.contains(&0) && l.contains(&1), "{backend}");
            for (li, pi) in l.iter().zip(&p) {
                assert_eq!(*li == 1, *pi >= 0.5);
                assert!((0.0..=1.0).contains(pi));
            }
        }
    }

    #[test]
    fn same_seed_same_predictions() {
        let d = ellipsoid_set(30, 5);
        let cfg = SurrogateConfig { steps: 10, ..Default::default() };
        let run = || {
            fit_surrogate(Backend::Kan, Task::Regression, &d, &cfg, &mut ChaCha8Rng::seed_from_u64(6))
                .unwrap()
                .predict_values(d.inputs().view())
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn single_candidate_and_permutation() {
        let d = ellipsoid_set(20, 7);
        let cfg = SurrogateConfig { steps: 10, ..Default::default() };
        let s = fit_surrogate(Backend::Mlp, Task::Regression, &d, &cfg, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let u = d.inputs().slice(ndarray::s![0..1, ..]).to_owned();
        assert_eq!(s.predict_values(u.view()).unwrap().len(), 1);
        let p = s.predict_values(d.inputs().view()).unwrap();
        let rev = d.inputs().slice(ndarray::s![..;-1, ..]).to_owned();
        let pr = s.predict_values(rev.view()).unwrap();
        let back: Vec<f64> = pr.into_iter().rev().collect();
        assert_eq!(p, back);
        assert!(s.predict_values(Array2::zeros((2, 3)).view()).is_err());
    }

    #[test]
    fn top_k_size_error() {
        let d = ellipsoid_set(10, 9);
        let cfg = SurrogateConfig { steps: 5, ..Default::default() };
        let s = fit_surrogate(Backend::Kan, Task::Regression, &d, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(matches!(s.select_top_k(d.inputs().view(), 11), Err(SurrogateError::Size { .. })));
        let mut all = s.select_top_k(d.inputs().view(), 10).unwrap();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn label_one_pick_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let labels = [0, 1, 1];
        let mut hits = [0usize; 3];
        for _ in 0..10_000 {
            hits[pick_label_one(&labels, &mut rng)] += 1;
        }
        assert_eq!(hits[0], 0);
        assert!((hits[1] as f64 / 10_000.0 - 0.5).abs() < 0.02);
        let all_zero = [0, 0, 0];
        let a = pick_label_one(&all_zero, &mut ChaCha8Rng::seed_from_u64(3));
        let b = pick_label_one(&all_zero, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn tie_at_half_is_class_one() {
        assert_eq!(labels_from_probabilities(&[0.5, 0.4999, 0.9]), vec![1, 0, 1]);
    }

    #[test]
    fn argmin_first_on_ties() {
        assert_eq!(argmin(&[3.0, 1.0, 2.0]), 1);
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
    }

    proptest! {
        #[test]
        fn quantile_count(values in proptest::collection::vec(-1e3f64..1e3, 1..60), frac in 0.01f64..0.99) {
            let l = label_by_quantile(&values, frac);
            let expected = (frac * values.len() as f64 - 1e-9).ceil() as usize;
            prop_assert_eq!(l.iter().filter(|&&v| v == 1).count(), expected);
        }
    }
}
