use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OperatorError;
use crate::problems::Bounds;

/// Share of a uniform interior bin's weight given to each end bin.
const END_BIN_FACTOR: f64 = 0.1;

/// Histogram over one coordinate.
///
/// End bins that would have zero width (the promising region touches the
/// bound) are dropped, so a dimension has between `M - 2` and `M` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VwhDim {
    /// Strictly ascending; first is the lower bound, last the upper bound.
    pub edges: Vec<f64>,
    pub probs: Vec<f64>,
}

impl VwhDim {
    pub fn bins(&self) -> usize {
        self.probs.len()
    }

    /// Index of the bin containing `x`; the upper bound belongs to the last bin.
    pub fn bin_of(&self, x: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= x);
        k.saturating_sub(1).min(self.bins() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VwhModel {
    pub dims: Vec<VwhDim>,
}

/// Fits an `m`-bin variable-width histogram per coordinate.
///
/// The interval spanned by the population, widened by half a cell on each
/// side and clipped to the bounds, is cut into `m - 2` equal bins weighted
/// by count plus one. The two remaining stretches up to the bounds form low
/// mass end bins. A collapsed coordinate uses a window half a uniform cell
/// wide centred on the common value.
pub fn vwh_build(pop: ArrayView2<f64>, bounds: &Bounds, m: usize) -> Result<VwhModel, OperatorError> {
    if pop.nrows() == 0 {
        return Err(OperatorError::InvalidArgument("population is empty".into()));
    }
    if m < 3 {
        return Err(OperatorError::InvalidArgument(format!("need at least 3 bins, got {m}")));
    }
    if pop.ncols() != bounds.dim() {
        return Err(OperatorError::Dimension { expected: bounds.dim(), got: pop.ncols() });
    }
    let cells = m - 2;
    let dims = pop
        .columns()
        .into_iter()
        .enumerate()
        .map(|(j, col)| {
            let (lo, hi) = (bounds.low[j], bounds.high[j]);
            let pmin = col.iter().fold(f64::INFINITY, |a, &v| a.min(v)).clamp(lo, hi);
            let pmax = col.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v)).clamp(lo, hi);
            let half = if pmax > pmin {
                0.5 * (pmax - pmin) / cells as f64
            } else {
                0.25 * (hi - lo) / cells as f64
            };
            let a = (pmin - half).max(lo);
            let b = (pmax + half).min(hi);
            let width = b - a;
            let mut weights = vec![1.0; cells];
            for &v in col {
                let k = (((v.clamp(a, b) - a) / width) * cells as f64).floor() as usize;
                weights[k.min(cells - 1)] += 1.0;
            }
            let end = END_BIN_FACTOR * weights.iter().sum::<f64>() / cells as f64;
            let mut edges: Vec<f64> = (0..=cells).map(|i| a + width * i as f64 / cells as f64).collect();
            edges[cells] = b;
            if a > lo {
                edges.insert(0, lo);
                weights.insert(0, end);
            }
            if b < hi {
                edges.push(hi);
                weights.push(end);
            }
            let total: f64 = weights.iter().sum();
            VwhDim { edges, probs: weights.into_iter().map(|w| w / total).collect() }
        })
        .collect();
    Ok(VwhModel { dims })
}

/// Draws `count` points, each coordinate independently: a bin by its
/// probability, then a uniform position inside it.
pub fn vwh_sample<R: Rng + ?Sized>(model: &VwhModel, count: usize, rng: &mut R) -> Array2<f64> {
    let pickers: Vec<WeightedIndex<f64>> = model
        .dims
        .iter()
        .map(|d| WeightedIndex::new(&d.probs).expect("normalized histogram weights"))
        .collect();
    let mut out = Array2::zeros((count, model.dims.len()));
    for mut row in out.rows_mut() {
        for (j, d) in model.dims.iter().enumerate() {
            let k = pickers[j].sample(rng);
            let (l, h) = (d.edges[k], d.edges[k + 1]);
            row[j] = (l + (h - l) * rng.random::<f64>()).min(h);
        }
    }
    out
}
