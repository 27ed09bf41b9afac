//! Benchmark objectives and the budget-enforcing evaluator.

use std::f64::consts::{E, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("evaluation budget of {fes_max} exhausted")]
    BudgetExhausted { fes_max: usize },
    #[error("coordinate {index} = {value} outside [{low}, {high}]")]
    OutOfBounds { index: usize, value: f64, low: f64, high: f64 },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("unknown problem `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Ellipsoid,
    Rosenbrock,
    Ackley,
    Griewank,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [Benchmark::Ellipsoid, Benchmark::Rosenbrock, Benchmark::Ackley, Benchmark::Griewank];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ellipsoid => "ellipsoid",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Ackley => "ackley",
            Benchmark::Griewank => "griewank",
        }
    }

    /// Symmetric box half-width shared by every coordinate.
    pub fn half_width(self) -> f64 {
        match self {
            Benchmark::Ellipsoid => 5.12,
            Benchmark::Rosenbrock => 2.048,
            Benchmark::Ackley => 32.768,
            Benchmark::Griewank => 600.0,
        }
    }

    pub fn bounds(self, n: usize) -> Bounds {
        let w = self.half_width();
        Bounds { low: vec![-w; n], high: vec![w; n] }
    }

    /// Location of the global minimum in dimension `n`.
    pub fn optimum(self, n: usize) -> Vec<f64> {
        match self {
            Benchmark::Rosenbrock => vec![1.0; n],
            _ => vec![0.0; n],
        }
    }

    pub fn eval<T: Scalar>(self, x: &[T]) -> Result<T, ProblemError> {
        if x.is_empty() {
            return Err(ProblemError::Dimension("empty input".into()));
        }
        Ok(match self {
            Benchmark::Ellipsoid => ellipsoid(x),
            Benchmark::Rosenbrock => rosenbrock(x)?,
            Benchmark::Ackley => ackley(x),
            Benchmark::Griewank => griewank(x),
        })
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ProblemError::Unknown(s.to_string()))
    }
}

/// `Σ i · x_i²`, 1-based `i`.
pub fn ellipsoid<T: Scalar>(x: &[T]) -> T {
    x.iter().enumerate().map(|(i, &v)| T::from_usize_lossy(i + 1) * v * v).sum()
}

pub fn rosenbrock<T: Scalar>(x: &[T]) -> Result<T, ProblemError> {
    if x.len() < 2 {
        return Err(ProblemError::Dimension(format!("rosenbrock needs n >= 2, got {}", x.len())));
    }
    let hundred = T::lit(100.0);
    Ok(x.windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = w[0] - T::one();
            hundred * a * a + b * b
        })
        .sum())
}

pub fn ackley<T: Scalar>(x: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let two_pi = T::lit(2.0 * PI);
    let sq = x.iter().map(|&v| v * v).sum::<T>() / n;
    let cs = x.iter().map(|&v| (two_pi * v).cos()).sum::<T>() / n;
    T::lit(-20.0) * (T::lit(-0.2) * sq.sqrt()).exp() - cs.exp() + T::lit(20.0) + T::lit(E)
}

pub fn griewank<T: Scalar>(x: &[T]) -> T {
    let sum = x.iter().map(|&v| v * v).sum::<T>() / T::lit(4000.0);
    let prod = x
        .iter()
        .enumerate()
        .fold(T::one(), |p, (i, &v)| p * (v / T::from_usize_lossy(i + 1).sqrt()).cos());
    T::one() + sum - prod
}

/// Per-coordinate box `[low_i, high_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.low[i] <= v && v <= self.high[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.low.iter().zip(&self.high).map(|(&l, &h)| l + (h - l) * rng.random::<f64>()).collect()
    }
}

/// How the initial population is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    #[default]
    Uniform,
    LatinHypercube,
}

/// A benchmark with a hard cap on expensive evaluations and a log of every call.
#[derive(Debug, Clone)]
pub struct BudgetedProblem {
    benchmark: Benchmark,
    n: usize,
    bounds: Bounds,
    fes: usize,
    fes_max: usize,
    log: Vec<(usize, f64)>,
    best: Option<(Vec<f64>, f64)>,
}

impl BudgetedProblem {
    pub fn new(benchmark: Benchmark, n: usize, fes_max: usize) -> Result<Self, ProblemError> {
        if n == 0 || (benchmark == Benchmark::Rosenbrock && n < 2) {
            return Err(ProblemError::Dimension(format!("{benchmark} does not support n = {n}")));
        }
        if fes_max == 0 {
            return Err(ProblemError::Dimension("fes_max must be positive".into()));
        }
        Ok(Self { benchmark, n, bounds: benchmark.bounds(n), fes: 0, fes_max, log: Vec::new(), best: None })
    }

    pub fn benchmark(&self) -> Benchmark {
        self.benchmark
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn fes(&self) -> usize {
        self.fes
    }

    pub fn fes_max(&self) -> usize {
        self.fes_max
    }

    pub fn remaining(&self) -> usize {
        self.fes_max - self.fes
    }

    pub fn is_exhausted(&self) -> bool {
        self.fes >= self.fes_max
    }

    /// `(fes, value)` for every evaluation so far.
    pub fn log(&self) -> &[(usize, f64)] {
        &self.log
    }

    /// Best point evaluated so far (the first one on ties).
    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, v)| (x.as_slice(), *v))
    }

    /// One expensive call: checks budget and bounds, then counts and logs it.
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, ProblemError> {
        if self.fes >= self.fes_max {
            return Err(ProblemError::BudgetExhausted { fes_max: self.fes_max });
        }
        if x.len() != self.n {
            return Err(ProblemError::Dimension(format!("expected {} coordinates, got {}", self.n, x.len())));
        }
        if let Some((index, &value)) =
            x.iter().enumerate().find(|&(i, &v)| !(self.bounds.low[i] <= v && v <= self.bounds.high[i]))
        {
            return Err(ProblemError::OutOfBounds {
                index,
                value,
                low: self.bounds.low[index],
                high: self.bounds.high[index],
            });
        }
        let value = self.benchmark.eval(x)?;
        self.fes += 1;
        self.log.push((self.fes, value));
        if self.best.as_ref().is_none_or(|b| value < b.1) {
            self.best = Some((x.to_vec(), value));
        }
        Ok(value)
    }

    /// Evaluation log as CSV with columns `fes,value,best_so_far`.
    pub fn write_log_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fes", "value", "best_so_far"])?;
        let mut best = f64::INFINITY;
        for &(fes, value) in &self.log {
            best = best.min(value);
            w.write_record([fes.to_string(), value.to_string(), best.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `count` points inside the bounds, one per row.
    pub fn initial_population<R: Rng + ?Sized>(&self, count: usize, method: InitMethod, rng: &mut R) -> Array2<f64> {
        match method {
            InitMethod::Uniform => uniform_init(&self.bounds, count, rng),
            InitMethod::LatinHypercube => latin_hypercube(&self.bounds, count, rng),
        }
    }
}

/// I.i.d. uniform samples inside `bounds`.
pub fn uniform_init<R: Rng + ?Sized>(bounds: &Bounds, count: usize, rng: &mut R) -> Array2<f64> {
    let n = bounds.dim();
    let mut out = Array2::zeros((count, n));
    for mut row in out.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = bounds.low[j] + (bounds.high[j] - bounds.low[j]) * rng.random::<f64>();
        }
    }
    out
}

pub fn latin_hypercube<R: Rng + ?Sized>(bounds: &Bounds, count: usize, rng: &mut R) -> Array2<f64> {
    use rand::seq::SliceRandom;
    let n = bounds.dim();
    let mut out = Array2::zeros((count, n));
    for j in 0..n {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(rng);
        let width = (bounds.high[j] - bounds.low[j]) / count as f64;
        for (i, s) in strata.into_iter().enumerate() {
            out[[i, j]] = bounds.low[j] + width * (s as f64 + rng.random::<f64>());
        }
    }
    out
}
