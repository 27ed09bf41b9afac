//! Uniform B-spline grids and Cox–de Boor basis evaluation.
//!
//! A grid over `[lower, upper]` with `G` cells and degree `k` carries the
//! knot vector `t_i = lower + (i - k) * h` for `i = 0..=G + 2k`, `h = (upper - lower) / G`.
//! The `G + k` basis functions form a partition of unity on `[lower, upper]`;
//! outside that interval the extended knots are used as-is and the basis
//! decays to zero beyond the outermost knots.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::KanError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineGrid<T> {
    pub lower: T,
    pub upper: T,
    pub intervals: usize,
    pub order: usize,
}

impl<T: Scalar> SplineGrid<T> {
    pub fn new(lower: T, upper: T, intervals: usize, order: usize) -> Result<Self, KanError> {
        if !(lower.is_finite() && upper.is_finite()) || lower >= upper {
            return Err(KanError::InvalidGrid(format!(
                "need finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        if intervals == 0 {
            return Err(KanError::InvalidGrid("grid needs at least one interval".into()));
        }
        Ok(Self { lower, upper, intervals, order })
    }

    pub fn num_basis(&self) -> usize {
        self.intervals + self.order
    }

    pub fn step(&self) -> T {
        (self.upper - self.lower) / T::from_usize_lossy(self.intervals)
    }

    pub fn knots(&self) -> Vec<T> {
        let h = self.step();
        let k = self.order as isize;
        (0..self.intervals + 2 * self.order + 1)
            .map(|i| self.lower + T::lit((i as isize - k) as f64) * h)
            .collect()
    }

    /// Degree-0 indicators over all `G + 2k` knot spans.
    ///
    /// Inside `[lower, upper]` the span is found from the step index, so
    /// rounding in the knots can never leave a point uncovered and `upper`
    /// belongs to the last interior span.
    fn indicators(&self, knots: &[T], x: T) -> Vec<T> {
        let spans = self.intervals + 2 * self.order;
        let mut b = vec![T::zero(); spans];
        if x >= self.lower && x <= self.upper {
            let i = ((x - self.lower) / self.step()).floor().to_usize().unwrap_or(0);
            b[i.min(self.intervals - 1) + self.order] = T::one();
            return b;
        }
        for (i, v) in b.iter_mut().enumerate() {
            if knots[i] <= x && x < knots[i + 1] {
                *v = T::one();
                break;
            }
        }
        b
    }

    /// Raises `b` from degree `degree - 1` to `degree` (uniform-knot Cox–de Boor step).
    fn elevate(knots: &[T], h: T, b: &[T], degree: usize, x: T) -> Vec<T> {
        let denom = T::from_usize_lossy(degree) * h;
        (0..b.len() - 1)
            .map(|i| {
                (x - knots[i]) / denom * b[i] + (knots[i + degree + 1] - x) / denom * b[i + 1]
            })
            .collect()
    }

    /// All `G + k` basis values at `x`.
    pub fn basis(&self, x: T) -> Vec<T> {
        let knots = self.knots();
        let h = self.step();
        let mut b = self.indicators(&knots, x);
        for p in 1..=self.order {
            b = Self::elevate(&knots, h, &b, p, x);
        }
        b
    }

    /// Basis values and their derivatives with respect to `x`.
    ///
    /// For uniform knots `B'_{i,k} = (B_{i,k-1} - B_{i+1,k-1}) / h`; degree 0
    /// has zero derivative almost everywhere.
    pub fn basis_with_derivative(&self, x: T) -> (Vec<T>, Vec<T>) {
        let knots = self.knots();
        let h = self.step();
        let mut b = self.indicators(&knots, x);
        if self.order == 0 {
            let d = vec![T::zero(); b.len()];
            return (b, d);
        }
        for p in 1..self.order {
            b = Self::elevate(&knots, h, &b, p, x);
        }
        let deriv: Vec<T> = b.windows(2).map(|w| (w[0] - w[1]) / h).collect();
        let values = Self::elevate(&knots, h, &b, self.order, x);
        (values, deriv)
    }
}

/// Free-function form of [`SplineGrid::basis`].
pub fn bspline_basis<T: Scalar>(x: T, grid: &SplineGrid<T>) -> Vec<T> {
    grid.basis(x)
}

/// Per-dimension grids spanning the sample range widened by 10% on each side.
///
/// A dimension whose samples are all equal gets a unit-width grid centred on
/// that value.
pub fn grid_from_samples<T: Scalar>(
    samples: &Array2<T>,
    intervals: usize,
    order: usize,
) -> Result<Vec<SplineGrid<T>>, KanError> {
    if samples.nrows() == 0 {
        return Err(KanError::EmptyTrainingSet);
    }
    let margin = T::lit(0.1);
    let half = T::lit(0.5);
    samples
        .columns()
        .into_iter()
        .map(|col| {
            let (lo, hi) = col
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let range = hi - lo;
            if range > T::zero() {
                SplineGrid::new(lo - margin * range, hi + margin * range, intervals, order)
            } else {
                SplineGrid::new(lo - half, hi + half, intervals, order)
            }
        })
        .collect()
}
