//! Kolmogorov-Arnold networks built from B-spline edge functions.

mod layer;
mod network;
mod spline;


pub use layer::{edge_eval, EdgeFunction, KanLayer};
pub use network::{network_forward, KanNetwork};
pub use spline::{bspline_basis, grid_from_samples, SplineGrid};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KanError {
    #[error("input shape mismatch: expected {expected}, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
    #[error("invalid spline grid: {0}")]
    InvalidGrid(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("training diverged at iteration {iteration}")]
    TrainingDiverged { iteration: usize, last_params: Vec<f64> },
}

/// Spline and initialisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanConfig {
    /// Grid cells `G`.
    pub intervals: usize,
    /// Spline degree `k`.
    pub order: usize,
    /// Standard deviation of the initial spline coefficients.
    pub coeff_std: f64,
    /// Half-width of the fixed `[-w, w]` grid used by every layer after the
    /// first. Hidden activations move during training, so these grids are
    /// not tied to their initial range.
    pub hidden_grid: f64,
}

impl Default for KanConfig {
    fn default() -> Self {
        Self { intervals: 5, order: 3, coeff_std: 0.1, hidden_grid: 3.0 }
    }
}
