//! Limited-memory BFGS with a strong-Wolfe line search.
//!
//! The line search follows the bracketing/zoom scheme of Nocedal & Wright
//! (Algorithms 3.5 and 3.6) with safeguarded cubic interpolation. Trial points
//! whose value or gradient is not finite are treated as infinitely bad, so the
//! search backs off instead of accepting them. Every accepted step satisfies
//! the sufficient-decrease condition, which makes the returned value never
//! larger than the starting value.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsConfig {
    pub history: usize,
    pub max_iterations: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub tolerance_grad: f64,
    pub tolerance_change: f64,
    pub max_line_search_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            history: 10,
            max_iterations: 50,
            c1: 1e-4,
            c2: 0.9,
            tolerance_grad: 1e-12,
            tolerance_change: 1e-14,
            max_line_search_evals: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub initial_value: T,
    pub iterations: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LbfgsError<T> {
    /// The objective was not finite at the last point that could be kept.
    NonFinite { iteration: usize, last_x: Vec<T> },
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[derive(Clone)]
struct Probe<T> {
    step: T,
    value: T,
    slope: T,
    grad: Vec<T>,
}

struct LineSearch<'a, T, F> {
    f: &'a mut F,
    x: &'a [T],
    dir: &'a [T],
    f0: T,
    slope0: T,
    c1: T,
    c2: T,
    evals: usize,
    budget: usize,
}

impl<T: Scalar, F: FnMut(&[T]) -> (T, Vec<T>)> LineSearch<'_, T, F> {
    fn probe(&mut self, step: T) -> Probe<T> {
        self.evals += 1;
        let trial: Vec<T> = self.x.iter().zip(self.dir).map(|(&x, &d)| x + step * d).collect();
        let (value, grad) = (self.f)(&trial);
        if !value.is_finite() || !all_finite(&grad) {
            return Probe { step, value: T::infinity(), slope: T::nan(), grad };
        }
        let slope = dot(&grad, self.dir);
        Probe { step, value, slope, grad }
    }

    fn armijo_ok(&self, p: &Probe<T>) -> bool {
        p.value <= self.f0 + self.c1 * p.step * self.slope0
    }

    fn curvature_ok(&self, p: &Probe<T>) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    /// Returns an accepted point with `value < f0`, or `None`.
    fn run(&mut self, initial_step: T) -> Option<Probe<T>> {
        let mut prev = Probe { step: T::zero(), value: self.f0, slope: self.slope0, grad: Vec::new() };
        let mut step = initial_step;
        let mut first = true;
        while self.evals < self.budget {
            let cur = self.probe(step);
            if !cur.value.is_finite() || !self.armijo_ok(&cur) || (!first && cur.value >= prev.value) {
                return self.zoom(prev, cur);
            }
            if self.curvature_ok(&cur) {
                return Some(cur);
            }
            if cur.slope >= T::zero() {
                return self.zoom(cur, prev);
            }
            first = false;
            let next = interpolate(&prev, &cur, cur.step * T::lit(1.01), cur.step * T::lit(10.0));
            prev = cur;
            step = next;
        }
        (prev.step > T::zero()).then_some(prev)
    }

    fn zoom(&mut self, mut lo: Probe<T>, mut hi: Probe<T>) -> Option<Probe<T>> {
        while self.evals < self.budget {
            let (a, b) = if lo.step < hi.step { (lo.step, hi.step) } else { (hi.step, lo.step) };
            let width = b - a;
            if width <= T::epsilon() * b.max(T::one()) {
                break;
            }
            let margin = T::lit(0.1) * width;
            let step = interpolate(&lo, &hi, a + margin, b - margin);
            let cur = self.probe(step);
            if !cur.value.is_finite() || !self.armijo_ok(&cur) || cur.value >= lo.value {
                hi = cur;
            } else {
                if self.curvature_ok(&cur) {
                    return Some(cur);
                }
                if cur.slope * (hi.step - lo.step) >= T::zero() {
                    hi = lo;
                }
                lo = cur;
            }
        }
        (lo.step > T::zero() && lo.value < self.f0).then_some(lo)
    }
}

/// Minimiser of the cubic through two probes, clamped to `[lo, hi]`; bisects when undefined.
fn interpolate<T: Scalar>(p1: &Probe<T>, p2: &Probe<T>, lo: T, hi: T) -> T {
    let mid = (lo + hi) * T::lit(0.5);
    if !(p1.value.is_finite() && p2.value.is_finite() && p1.slope.is_finite() && p2.slope.is_finite())
        || p1.step == p2.step
    {
        return mid;
    }
    let (x1, f1, g1) = (p1.step, p1.value, p1.slope);
    let (x2, f2, g2) = (p2.step, p2.value, p2.slope);
    let d1 = g1 + g2 - T::lit(3.0) * (f1 - f2) / (x1 - x2);
    let disc = d1 * d1 - g1 * g2;
    if disc < T::zero() {
        return mid;
    }
    let d2 = disc.sqrt();
    let t = if x1 <= x2 {
        x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + T::lit(2.0) * d2))
    } else {
        x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + T::lit(2.0) * d2))
    };
    if t.is_finite() {
        t.max(lo).min(hi)
    } else {
        mid
    }
}

/// Minimises `f`, which returns the value and gradient at a point.
pub fn minimize<T, F>(mut f: F, x0: Vec<T>, config: &LbfgsConfig) -> Result<LbfgsResult<T>, LbfgsError<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> (T, Vec<T>),
{
    let (mut fx, mut g) = f(&x0);
    let mut evaluations = 1;
    if !fx.is_finite() || !all_finite(&g) {
        return Err(LbfgsError::NonFinite { iteration: 0, last_x: x0 });
    }
    let initial_value = fx;
    let mut x = x0;
    let tol_grad = T::lit(config.tolerance_grad);
    let tol_change = T::lit(config.tolerance_change);
    let mut s_hist: VecDeque<Vec<T>> = VecDeque::with_capacity(config.history);
    let mut y_hist: VecDeque<Vec<T>> = VecDeque::with_capacity(config.history);
    let mut iterations = 0;

    if max_abs(&g) <= tol_grad {
        return Ok(LbfgsResult { x, value: fx, initial_value, iterations, evaluations });
    }

    while iterations < config.max_iterations {
        iterations += 1;
        let mut dir = two_loop(&g, &s_hist, &y_hist);
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= -tol_change || !all_finite(&dir) {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|&v| -v).collect();
            slope = dot(&g, &dir);
        }
        let initial_step = if s_hist.is_empty() {
            let l1: T = g.iter().map(|v| v.abs()).sum();
            T::one().min(T::one() / l1)
        } else {
            T::one()
        };

        let mut search = LineSearch {
            f: &mut f,
            x: &x,
            dir: &dir,
            f0: fx,
            slope0: slope,
            c1: T::lit(config.c1),
            c2: T::lit(config.c2),
            evals: 0,
            budget: config.max_line_search_evals,
        };
        let accepted = search.run(initial_step);
        evaluations += search.evals;

        let Some(probe) = accepted else {
            if s_hist.is_empty() {
                break;
            }
            // curvature pairs may be stale; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            continue;
        };

        let s: Vec<T> = dir.iter().map(|&d| probe.step * d).collect();
        let y: Vec<T> = probe.grad.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let ys = dot(&y, &s);
        if ys > T::lit(1e-10) * dot(&s, &s).max(T::min_positive_value()) {
            if s_hist.len() == config.history {
                s_hist.pop_front();
                y_hist.pop_front();
            }
            s_hist.push_back(s.clone());
            y_hist.push_back(y);
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += *si;
        }
        let change = fx - probe.value;
        fx = probe.value;
        g = probe.grad;

        if max_abs(&g) <= tol_grad || max_abs(&s) <= tol_change || change.abs() < tol_change {
            break;
        }
    }

    Ok(LbfgsResult { x, value: fx, initial_value, iterations, evaluations })
}

/// `-H g` from the stored curvature pairs.
fn two_loop<T: Scalar>(g: &[T], s_hist: &VecDeque<Vec<T>>, y_hist: &VecDeque<Vec<T>>) -> Vec<T> {
    let mut q: Vec<T> = g.to_vec();
    let m = s_hist.len();
    let mut alpha = vec![T::zero(); m];
    let rho: Vec<T> = s_hist.iter().zip(y_hist).map(|(s, y)| T::one() / dot(y, s)).collect();
    for i in (0..m).rev() {
        alpha[i] = rho[i] * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alpha[i] * *yj;
        }
    }
    if let (Some(s), Some(y)) = (s_hist.back(), y_hist.back()) {
        let gamma = dot(s, y) / dot(y, y);
        for v in q.iter_mut() {
            *v *= gamma;
        }
    }
    for i in 0..m {
        let beta = rho[i] * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alpha[i] - beta) * *sj;
        }
    }
    q.into_iter().map(|v| -v).collect()
}
