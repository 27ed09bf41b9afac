//! Reproduction operators: composite DE trial generation, the
//! variable-width histogram model, and bound repair.

mod code;
mod vwh;

pub use code::{binomial_crossover, code_trials, mutate, strategy_schedule, CodeConfig, Strategy};
pub use vwh::{vwh_build, vwh_sample, VwhDim, VwhModel};

use rand::Rng;
use thiserror::Error;

use crate::problems::Bounds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("operator needs at least {need} population rows, got {got}")]
    Arity { need: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Pulls violated coordinates back inside `bounds`.
///
/// With a parent, a coordinate below `low` is redrawn uniformly from
/// `[low, (low + parent) / 2]` (mirrored above `high`); without one it is
/// redrawn uniformly from the whole interval. In-bounds coordinates are
/// left untouched.
pub fn repair_bounds<R: Rng + ?Sized>(x: &mut [f64], bounds: &Bounds, parent: Option<&[f64]>, rng: &mut R) {
    for (i, v) in x.iter_mut().enumerate() {
        let (lo, hi) = (bounds.low[i], bounds.high[i]);
        if *v >= lo && *v <= hi {
            continue;
        }
        let (a, b) = match parent.map(|p| p[i].clamp(lo, hi)) {
            Some(p) if *v < lo => (lo, 0.5 * (lo + p)),
            Some(p) if *v > hi => (0.5 * (hi + p), hi),
            // NaN or no parent
            _ => (lo, hi),
        };
        *v = (a + (b - a) * rng.random::<f64>()).clamp(lo, hi);
    }
}
