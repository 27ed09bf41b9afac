use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::spline::SplineGrid;
use super::{KanConfig, KanError};
use crate::scalar::{silu, silu_derivative, Scalar};

/// A learnable univariate function `w_b * silu(x) + w_s * Σ c_i B_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFunction<T> {
    pub grid: SplineGrid<T>,
    pub coeffs: Vec<T>,
    pub base_weight: T,
    pub spline_weight: T,
}

impl<T: Scalar> EdgeFunction<T> {
    pub fn new(grid: SplineGrid<T>, coeffs: Vec<T>, base_weight: T, spline_weight: T) -> Result<Self, KanError> {
        if coeffs.len() != grid.num_basis() {
            return Err(KanError::InputShape { expected: grid.num_basis(), got: coeffs.len() });
        }
        if !(base_weight.is_finite() && spline_weight.is_finite() && coeffs.iter().all(|c| c.is_finite())) {
            return Err(KanError::InvalidData("edge parameters must be finite".into()));
        }
        Ok(Self { grid, coeffs, base_weight, spline_weight })
    }

    pub fn zeroed(grid: SplineGrid<T>) -> Self {
        Self { grid, coeffs: vec![T::zero(); grid.num_basis()], base_weight: T::zero(), spline_weight: T::zero() }
    }

    pub fn num_params(&self) -> usize {
        2 + self.coeffs.len()
    }

    pub fn spline(&self, x: T) -> T {
        spline_value(&self.coeffs, &self.grid.basis(x))
    }

    pub fn eval(&self, x: T) -> T {
        self.base_weight * silu(x) + self.spline_weight * self.spline(x)
    }
}

pub fn edge_eval<T: Scalar>(e: &EdgeFunction<T>, x: T) -> T {
    e.eval(x)
}

fn spline_value<T: Scalar>(coeffs: &[T], basis: &[T]) -> T {
    coeffs.iter().zip(basis).map(|(&c, &b)| c * b).sum()
}

/// Per-input quantities shared by every edge leaving that input.
pub(crate) struct InputTerms<T> {
    silu: T,
    dsilu: T,
    basis: Vec<T>,
    dbasis: Vec<T>,
}

/// A dense block of edge functions; output `j` sums edge `(i, j)` over inputs `i`.
///
/// All edges leaving input `i` share one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanLayer<T> {
    in_dim: usize,
    out_dim: usize,
    /// Row-major: edge `(i, j)` at `i * out_dim + j`.
    edges: Vec<EdgeFunction<T>>,
}

impl<T: Scalar> KanLayer<T> {
    pub fn from_edges(in_dim: usize, out_dim: usize, edges: Vec<EdgeFunction<T>>) -> Result<Self, KanError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(KanError::InvalidShape("layer dimensions must be positive".into()));
        }
        if edges.len() != in_dim * out_dim {
            return Err(KanError::InputShape { expected: in_dim * out_dim, got: edges.len() });
        }
        for i in 0..in_dim {
            let g = edges[i * out_dim].grid;
            if edges[i * out_dim..(i + 1) * out_dim].iter().any(|e| e.grid != g) {
                return Err(KanError::InvalidShape(format!("edges from input {i} use different grids")));
            }
        }
        Ok(Self { in_dim, out_dim, edges })
    }

    /// Random layer: coefficients ~ N(0, coeff_std), `w_s = 1`, `w_b` Xavier-uniform.
    pub fn random<R: Rng + ?Sized>(
        grids: &[SplineGrid<T>],
        out_dim: usize,
        config: &KanConfig,
        rng: &mut R,
    ) -> Result<Self, KanError> {
        let in_dim = grids.len();
        let normal = Normal::new(0.0, config.coeff_std).map_err(|e| KanError::InvalidData(e.to_string()))?;
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let uniform = Uniform::new_inclusive(-limit, limit).map_err(|e| KanError::InvalidData(e.to_string()))?;
        let mut edges = Vec::with_capacity(in_dim * out_dim);
        for grid in grids {
            for _ in 0..out_dim {
                let coeffs = (0..grid.num_basis()).map(|_| T::lit(normal.sample(rng))).collect();
                edges.push(EdgeFunction {
                    grid: *grid,
                    coeffs,
                    base_weight: T::lit(uniform.sample(rng)),
                    spline_weight: T::one(),
                });
            }
        }
        Self::from_edges(in_dim, out_dim, edges)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn edge(&self, i: usize, j: usize) -> &EdgeFunction<T> {
        &self.edges[i * self.out_dim + j]
    }

    pub fn edges(&self) -> &[EdgeFunction<T>] {
        &self.edges
    }

    pub fn grid(&self, i: usize) -> &SplineGrid<T> {
        &self.edges[i * self.out_dim].grid
    }

    pub fn num_params(&self) -> usize {
        self.edges.iter().map(EdgeFunction::num_params).sum()
    }

    pub fn write_params(&self, out: &mut Vec<T>) {
        for e in &self.edges {
            out.push(e.base_weight);
            out.push(e.spline_weight);
            out.extend_from_slice(&e.coeffs);
        }
    }

    /// Consumes this layer's share of `params` and returns the remainder.
    pub fn read_params<'a>(&mut self, mut params: &'a [T]) -> &'a [T] {
        for e in &mut self.edges {
            e.base_weight = params[0];
            e.spline_weight = params[1];
            let nb = e.coeffs.len();
            e.coeffs.copy_from_slice(&params[2..2 + nb]);
            params = &params[2 + nb..];
        }
        params
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.out_dim];
        for (i, &xi) in x.iter().enumerate() {
            let basis = self.grid(i).basis(xi);
            let s = silu(xi);
            for (j, o) in out.iter_mut().enumerate() {
                let e = self.edge(i, j);
                *o += e.base_weight * s + e.spline_weight * spline_value(&e.coeffs, &basis);
            }
        }
        out
    }

    pub(crate) fn input_terms(&self, x: &[T]) -> Vec<InputTerms<T>> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let (basis, dbasis) = self.grid(i).basis_with_derivative(xi);
                InputTerms { silu: silu(xi), dsilu: silu_derivative(xi), basis, dbasis }
            })
            .collect()
    }

    pub(crate) fn forward_terms(&self, terms: &[InputTerms<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.out_dim];
        for (i, t) in terms.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                let e = self.edge(i, j);
                *o += e.base_weight * t.silu + e.spline_weight * spline_value(&e.coeffs, &t.basis);
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grad` (this layer's slice) and
    /// returns the gradient with respect to the layer input.
    pub(crate) fn backward(&self, terms: &[InputTerms<T>], upstream: &[T], grad: &mut [T]) -> Vec<T> {
        let mut g_in = vec![T::zero(); self.in_dim];
        let mut offset = 0;
        for (i, t) in terms.iter().enumerate() {
            for (j, &up) in upstream.iter().enumerate() {
                let e = self.edge(i, j);
                let nb = e.coeffs.len();
                let spline = spline_value(&e.coeffs, &t.basis);
                let dspline = spline_value(&e.coeffs, &t.dbasis);
                let slot = &mut grad[offset..offset + 2 + nb];
                slot[0] += up * t.silu;
                slot[1] += up * spline;
                let ws_up = up * e.spline_weight;
                for (g, &b) in slot[2..].iter_mut().zip(&t.basis) {
                    *g += ws_up * b;
                }
                g_in[i] += up * (e.base_weight * t.dsilu + e.spline_weight * dspline);
                offset += 2 + nb;
            }
        }
        g_in
    }
}
