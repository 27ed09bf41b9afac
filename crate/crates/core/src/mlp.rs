//! Single-hidden-layer tanh perceptron used as the baseline surrogate.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::kan::KanError;
use crate::model::{Head, Trainable};
use crate::scalar::Scalar;

/// `out = W2 · tanh(W1 · x + b1) + b2`.
///
/// Flat parameter order: `W1` row-major (hidden × input), `b1`, `W2` row-major
/// (output × hidden), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    input: usize,
    hidden: usize,
    head: Head,
    w1: Vec<T>,
    b1: Vec<T>,
    w2: Vec<T>,
    b2: Vec<T>,
}

impl<T: Scalar> Mlp<T> {
    /// Xavier-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, head: Head, rng: &mut R) -> Result<Self, KanError> {
        if input == 0 || hidden == 0 {
            return Err(KanError::InvalidShape("MLP widths must be positive".into()));
        }
        let out = head.output_dim();
        let xavier = |fan_in: usize, fan_out: usize, count: usize, rng: &mut R| -> Result<Vec<T>, KanError> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let u = Uniform::new_inclusive(-a, a).map_err(|e| KanError::InvalidData(e.to_string()))?;
            Ok((0..count).map(|_| T::lit(u.sample(rng))).collect())
        };
        let w1 = xavier(input, hidden, hidden * input, rng)?;
        let w2 = xavier(hidden, out, out * hidden, rng)?;
        Ok(Self { input, hidden, head, w1, b1: vec![T::zero(); hidden], w2, b2: vec![T::zero(); out] })
    }

    /// Hidden width `2n + 1`, matching the KAN surrogate shape.
    pub fn with_default_shape<R: Rng + ?Sized>(input: usize, head: Head, rng: &mut R) -> Result<Self, KanError> {
        Self::new(input, 2 * input + 1, head, rng)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn hidden_activations(&self, x: &[T]) -> Vec<T> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input..(h + 1) * self.input];
                (row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>() + self.b1[h]).tanh()
            })
            .collect()
    }

    fn check(&self, x: &[T]) -> Result<(), KanError> {
        if x.len() != self.input {
            return Err(KanError::InputShape { expected: self.input, got: x.len() });
        }
        Ok(())
    }
}

impl<T: Scalar> Trainable<T> for Mlp<T> {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn head(&self) -> Head {
        self.head
    }

    fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn params(&self) -> Vec<T> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    fn set_params(&mut self, params: &[T]) -> Result<(), KanError> {
        if params.len() != self.num_params() {
            return Err(KanError::InputShape { expected: self.num_params(), got: params.len() });
        }
        let (a, rest) = params.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
        Ok(())
    }

    fn raw_output(&self, x: &[T]) -> Result<Vec<T>, KanError> {
        self.check(x)?;
        let h = self.hidden_activations(x);
        Ok((0..self.b2.len())
            .map(|o| {
                let row = &self.w2[o * self.hidden..(o + 1) * self.hidden];
                row.iter().zip(&h).map(|(&w, &v)| w * v).sum::<T>() + self.b2[o]
            })
            .collect())
    }

    fn accumulate_gradient(&self, x: &[T], upstream: &[T], grad: &mut [T]) -> Result<(), KanError> {
        self.check(x)?;
        let h = self.hidden_activations(x);
        let (g_w1, rest) = grad.split_at_mut(self.w1.len());
        let (g_b1, rest) = rest.split_at_mut(self.b1.len());
        let (g_w2, g_b2) = rest.split_at_mut(self.w2.len());
        let mut g_h = vec![T::zero(); self.hidden];
        for (o, &up) in upstream.iter().enumerate() {
            g_b2[o] += up;
            for k in 0..self.hidden {
                g_w2[o * self.hidden + k] += up * h[k];
                g_h[k] += up * self.w2[o * self.hidden + k];
            }
        }
        for k in 0..self.hidden {
            let g_pre = g_h[k] * (T::one() - h[k] * h[k]);
            g_b1[k] += g_pre;
            for (j, &xj) in x.iter().enumerate() {
                g_w1[k * self.input + j] += g_pre * xj;
            }
        }
        Ok(())
    }
}
