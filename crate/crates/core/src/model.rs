//! The training contract shared by the KAN and MLP backends.

use serde::{Deserialize, Serialize};

use crate::data::{Targets, TrainingSet};
use crate::kan::KanError;
use crate::optim::{minimize, LbfgsConfig, LbfgsError};
use crate::scalar::Scalar;

/// Output head of a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// Single linear output.
    RegressionScalar,
    /// Two logits mapped through softmax.
    ClassificationSoftmax2,
}

impl Head {
    pub fn output_dim(self) -> usize {
        match self {
            Head::RegressionScalar => 1,
            Head::ClassificationSoftmax2 => 2,
        }
    }
}

/// A differentiable model with a flat parameter view.
pub trait Trainable<T: Scalar> {
    fn input_dim(&self) -> usize;
    fn head(&self) -> Head;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<T>;
    fn set_params(&mut self, params: &[T]) -> Result<(), KanError>;

    /// Raw network outputs before the head is applied.
    fn raw_output(&self, x: &[T]) -> Result<Vec<T>, KanError>;

    /// Adds `d loss / d params` for one sample into `grad`, given `d loss / d raw_output`.
    fn accumulate_gradient(&self, x: &[T], upstream: &[T], grad: &mut [T]) -> Result<(), KanError>;

    /// Head-processed output: the scalar prediction, or two class probabilities.
    fn forward(&self, x: &[T]) -> Result<Vec<T>, KanError> {
        let raw = self.raw_output(x)?;
        Ok(match self.head() {
            Head::RegressionScalar => raw,
            Head::ClassificationSoftmax2 => softmax(&raw),
        })
    }

    /// Mean squared error or mean cross-entropy with its exact gradient.
    fn loss_and_gradient(&self, data: &TrainingSet<T>) -> Result<(T, Vec<T>), KanError> {
        if data.is_empty() {
            return Err(KanError::EmptyTrainingSet);
        }
        if data.dim() != self.input_dim() {
            return Err(KanError::InputShape { expected: self.input_dim(), got: data.dim() });
        }
        let n = T::from_usize_lossy(data.len());
        let mut grad = vec![T::zero(); self.num_params()];
        let mut loss = T::zero();
        for i in 0..data.len() {
            let x = data.row(i);
            let raw = self.raw_output(x)?;
            let (l, upstream) = match (self.head(), data.targets()) {
                (Head::RegressionScalar, Targets::Values(y)) => {
                    let r = raw[0] - y[i];
                    (r * r, vec![T::lit(2.0) * r / n])
                }
                (Head::ClassificationSoftmax2, Targets::Labels(l)) => {
                    let p = softmax(&raw);
                    let c = l[i] as usize;
                    let lse = log_sum_exp(&raw);
                    let up = (0..2)
                        .map(|k| (p[k] - if k == c { T::one() } else { T::zero() }) / n)
                        .collect();
                    (lse - raw[c], up)
                }
                _ => return Err(KanError::InvalidData("targets do not match the model head".into())),
            };
            loss += l;
            self.accumulate_gradient(x, &upstream, &mut grad)?;
        }
        Ok((loss / n, grad))
    }
}

pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub initial_loss: T,
    pub final_loss: T,
    pub iterations: usize,
}

/// Trains `model` in place with L-BFGS for at most `steps` iterations.
///
/// On divergence the model keeps the last parameters whose loss was finite.
pub fn fit<T: Scalar, M: Trainable<T>>(
    model: &mut M,
    data: &TrainingSet<T>,
    steps: usize,
    config: &LbfgsConfig,
) -> Result<FitReport<T>, KanError> {
    if steps == 0 {
        return Err(KanError::InvalidData("steps must be at least 1".into()));
    }
    let x0 = model.params();
    let mut probe = ProbeModel { model: &mut *model, data, failure: None };
    let outcome = minimize(
        |p: &[T]| probe.evaluate(p),
        x0,
        &LbfgsConfig { max_iterations: steps, ..config.clone() },
    );
    if let Some(e) = probe.failure.take() {
        return Err(e);
    }
    match outcome {
        Ok(res) => {
            model.set_params(&res.x)?;
            Ok(FitReport {
                initial_loss: res.initial_value,
                final_loss: res.value,
                iterations: res.iterations,
            })
        }
        Err(LbfgsError::NonFinite { iteration, last_x }) => {
            model.set_params(&last_x)?;
            Err(KanError::TrainingDiverged {
                iteration,
                last_params: last_x.iter().map(|v| v.as_f64()).collect(),
            })
        }
    }
}

struct ProbeModel<'a, T: Scalar, M: Trainable<T>> {
    model: &'a mut M,
    data: &'a TrainingSet<T>,
    failure: Option<KanError>,
}

impl<T: Scalar, M: Trainable<T>> ProbeModel<'_, T, M> {
    fn evaluate(&mut self, p: &[T]) -> (T, Vec<T>) {
        let res = self.model.set_params(p).and_then(|_| self.model.loss_and_gradient(self.data));
        match res {
            Ok(v) => v,
            Err(e) => {
                self.failure.get_or_insert(e);
                (T::nan(), vec![T::nan(); p.len()])
            }
        }
    }
}
