use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::KanLayer;
use super::spline::{grid_from_samples, SplineGrid};
use super::{KanConfig, KanError};
use crate::model::{Head, Trainable};
use crate::scalar::Scalar;

/// Layers of edge functions composed in order, followed by an output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanNetwork<T> {
    layers: Vec<KanLayer<T>>,
    head: Head,
}

impl<T: Scalar> KanNetwork<T> {
    pub fn new(layers: Vec<KanLayer<T>>, head: Head) -> Result<Self, KanError> {
        let Some(last) = layers.last() else {
            return Err(KanError::InvalidShape("network needs at least one layer".into()));
        };
        if last.out_dim() != head.output_dim() {
            return Err(KanError::InvalidShape(format!(
                "last layer has {} outputs, head needs {}",
                last.out_dim(),
                head.output_dim()
            )));
        }
        if let Some(w) = layers.windows(2).find(|w| w[0].out_dim() != w[1].in_dim()) {
            return Err(KanError::InvalidShape(format!(
                "layer width mismatch: {} -> {}",
                w[0].out_dim(),
                w[1].in_dim()
            )));
        }
        Ok(Self { layers, head })
    }

    /// The `[n, 2n + 1, out]` shape used for surrogates.
    pub fn default_shape(n: usize, head: Head) -> Vec<usize> {
        vec![n, 2 * n + 1, head.output_dim()]
    }

    /// Randomly initialised network. First-layer grids cover the (already
    /// standardized) `inputs`; later layers use `[-hidden_grid, hidden_grid]`.
    pub fn from_data<R: Rng + ?Sized>(
        shape: &[usize],
        head: Head,
        inputs: &Array2<T>,
        config: &KanConfig,
        rng: &mut R,
    ) -> Result<Self, KanError> {
        if shape.len() < 2 {
            return Err(KanError::InvalidShape("shape needs input and output widths".into()));
        }
        if inputs.ncols() != shape[0] {
            return Err(KanError::InputShape { expected: shape[0], got: inputs.ncols() });
        }
        let half = T::lit(config.hidden_grid);
        let hidden = SplineGrid::new(-half, half, config.intervals, config.order)?;
        let mut layers = Vec::with_capacity(shape.len() - 1);
        for (k, w) in shape.windows(2).enumerate() {
            let grids = if k == 0 {
                grid_from_samples(inputs, config.intervals, config.order)?
            } else {
                vec![hidden; w[0]]
            };
            layers.push(KanLayer::random(&grids, w[1], config, rng)?);
        }
        Self::new(layers, head)
    }

    pub fn layers(&self) -> &[KanLayer<T>] {
        &self.layers
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].in_dim()];
        s.extend(self.layers.iter().map(KanLayer::out_dim));
        s
    }

    /// Pretty JSON dump of shapes, grids and coefficients.
    pub fn debug_document(&self) -> String
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

impl<T: Scalar> Trainable<T> for KanNetwork<T> {
    fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn head(&self) -> Head {
        self.head
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(KanLayer::num_params).sum()
    }

    fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            l.write_params(&mut out);
        }
        out
    }

    fn set_params(&mut self, params: &[T]) -> Result<(), KanError> {
        let expected = self.num_params();
        if params.len() != expected {
            return Err(KanError::InputShape { expected, got: params.len() });
        }
        let mut rest = params;
        for l in &mut self.layers {
            rest = l.read_params(rest);
        }
        Ok(())
    }

    fn raw_output(&self, x: &[T]) -> Result<Vec<T>, KanError> {
        if x.len() != self.input_dim() {
            return Err(KanError::InputShape { expected: self.input_dim(), got: x.len() });
        }
        let mut h = x.to_vec();
        for l in &self.layers {
            h = l.forward(&h);
        }
        Ok(h)
    }

    fn accumulate_gradient(&self, x: &[T], upstream: &[T], grad: &mut [T]) -> Result<(), KanError> {
        if x.len() != self.input_dim() {
            return Err(KanError::InputShape { expected: self.input_dim(), got: x.len() });
        }
        let mut terms = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for l in &self.layers {
            let t = l.input_terms(&h);
            h = l.forward_terms(&t);
            terms.push(t);
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offsets.push(acc);
            acc += l.num_params();
        }
        let mut g = upstream.to_vec();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let slice = &mut grad[offsets[k]..offsets[k] + l.num_params()];
            g = l.backward(&terms[k], &g, slice);
        }
        Ok(())
    }
}

/// Free-function form of [`Trainable::forward`].
pub fn network_forward<T: Scalar>(net: &KanNetwork<T>, x: &[T]) -> Result<Vec<T>, KanError> {
    net.forward(x)
}
