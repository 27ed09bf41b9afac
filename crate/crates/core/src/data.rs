//! Training data shared by the network backends and the surrogate layer.

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::kan::KanError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets<T> {
    /// Real objective values (regression).
    Values(Vec<T>),
    /// Class labels in `{0, 1}` (classification).
    Labels(Vec<u8>),
}

impl<T> Targets<T> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Values(v) => v.len(),
            Targets::Labels(l) => l.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Solutions (one per row) paired with their targets.
#[derive(Debug, Clone)]
pub struct TrainingSet<T> {
    inputs: Array2<T>,
    targets: Targets<T>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(inputs: Array2<T>, targets: Targets<T>) -> Result<Self, KanError> {
        if inputs.nrows() == 0 {
            return Err(KanError::EmptyTrainingSet);
        }
        if inputs.nrows() != targets.len() {
            return Err(KanError::InputShape { expected: inputs.nrows(), got: targets.len() });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(KanError::InvalidData("non-finite input".into()));
        }
        match &targets {
            Targets::Values(v) if v.iter().any(|y| !y.is_finite()) => {
                return Err(KanError::InvalidData("non-finite target".into()))
            }
            Targets::Labels(l) if l.iter().any(|&c| c > 1) => {
                return Err(KanError::InvalidData("labels must be 0 or 1".into()))
            }
            _ => {}
        }
        let inputs = inputs.as_standard_layout().into_owned();
        Ok(Self { inputs, targets })
    }

    pub fn regression(inputs: Array2<T>, values: Vec<T>) -> Result<Self, KanError> {
        Self::new(inputs, Targets::Values(values))
    }

    pub fn classification(inputs: Array2<T>, labels: Vec<u8>) -> Result<Self, KanError> {
        Self::new(inputs, Targets::Labels(labels))
    }

    pub fn inputs(&self) -> &Array2<T> {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets<T> {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.inputs.row(i).to_slice().expect("standard layout")
    }
}

/// Per-column affine map to zero mean and unit variance.
///
/// Columns with zero spread keep unit scale so constant inputs map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(data: &Array2<T>) -> Self {
        let n = T::from_usize_lossy(data.nrows().max(1));
        let mut mean = Vec::with_capacity(data.ncols());
        let mut scale = Vec::with_capacity(data.ncols());
        for col in data.axis_iter(Axis(1)) {
            let (m, s) = column_stats(col, n);
            mean.push(m);
            scale.push(s);
        }
        Self { mean, scale }
    }

    pub fn fit_values(values: &[T]) -> Self {
        let n = T::from_usize_lossy(values.len().max(1));
        let (m, s) = column_stats(ArrayView1::from(values), n);
        Self { mean: vec![m], scale: vec![s] }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &Array2<T>) -> Array2<T> {
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        out
    }

    pub fn transform_value(&self, v: T) -> T {
        (v - self.mean[0]) / self.scale[0]
    }

    pub fn inverse_value(&self, v: T) -> T {
        v * self.scale[0] + self.mean[0]
    }
}

fn column_stats<T: Scalar>(col: ArrayView1<T>, n: T) -> (T, T) {
    let mean = col.iter().copied().sum::<T>() / n;
    let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let sd = var.sqrt();
    (mean, if sd > T::zero() && sd.is_finite() { sd } else { T::one() })
}
