use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{repair_bounds, OperatorError};
use crate::problems::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Rand1Bin,
    Rand2Bin,
    /// `x + K(r1 - x) + F(r2 - r3)` with `K ~ U(0, 1)`, no crossover.
    CurrentToRand1,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rand1Bin, Strategy::Rand2Bin, Strategy::CurrentToRand1];

    pub fn donors(self) -> usize {
        match self {
            Strategy::Rand1Bin | Strategy::CurrentToRand1 => 3,
            Strategy::Rand2Bin => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeConfig {
    pub strategies: [Strategy; 3],
    /// `(F, CR)` pairs; each trial draws one uniformly.
    pub param_pool: [(f64, f64); 3],
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self { strategies: Strategy::ALL, param_pool: [(1.0, 0.1), (1.0, 0.9), (0.8, 0.2)] }
    }
}

impl CodeConfig {
    /// Rows needed so every strategy finds distinct donors besides the target.
    pub fn min_population(&self) -> usize {
        self.strategies.iter().map(|s| s.donors()).max().unwrap_or(0) + 1
    }
}

/// Mutant vector for `strategy` from explicit donors.
///
/// `donors` must hold `strategy.donors()` rows; `k` is the
/// current-to-rand mixing coefficient and is ignored by the other strategies.
pub fn mutate(strategy: Strategy, target: &[f64], donors: &[&[f64]], f: f64, k: f64) -> Vec<f64> {
    let d = donors;
    (0..target.len())
        .map(|j| match strategy {
            Strategy::Rand1Bin => d[0][j] + f * (d[1][j] - d[2][j]),
            Strategy::Rand2Bin => d[0][j] + f * (d[1][j] - d[2][j]) + f * (d[3][j] - d[4][j]),
            Strategy::CurrentToRand1 => target[j] + k * (d[0][j] - target[j]) + f * (d[1][j] - d[2][j]),
        })
        .collect()
}

/// Takes each mutant gene with probability `cr`; gene `j_rand` always
/// comes from the mutant.
pub fn binomial_crossover<R: Rng + ?Sized>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    let j_rand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&t, &m))| if j == j_rand || rng.random::<f64>() < cr { m } else { t })
        .collect()
}

/// `count` distinct indices in `0..n`, none equal to `exclude`.
fn distinct_donors<R: Rng + ?Sized>(n: usize, exclude: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let r = rng.random_range(0..n);
        if r != exclude && !picked.contains(&r) {
            picked.push(r);
        }
    }
    picked
}

/// Strategy per trial: each once in order when `t` equals the number of
/// strategies, otherwise drawn uniformly.
pub fn strategy_schedule<R: Rng + ?Sized>(t: usize, config: &CodeConfig, rng: &mut R) -> Vec<Strategy> {
    let k = config.strategies.len();
    if t == k {
        config.strategies.to_vec()
    } else {
        (0..t).map(|_| config.strategies[rng.random_range(0..k)]).collect()
    }
}

/// Generates `t` repaired trial vectors for population row `target`.
pub fn code_trials<R: Rng + ?Sized>(
    target: usize,
    pop: ArrayView2<f64>,
    bounds: &Bounds,
    t: usize,
    config: &CodeConfig,
    rng: &mut R,
) -> Result<Array2<f64>, OperatorError> {
    let (rows, n) = pop.dim();
    let need = config.min_population();
    if rows < need {
        return Err(OperatorError::Arity { need, got: rows });
    }
    if t == 0 {
        return Err(OperatorError::InvalidArgument("t must be at least 1".into()));
    }
    if target >= rows {
        return Err(OperatorError::InvalidArgument(format!("target {target} outside population of {rows}")));
    }
    if bounds.dim() != n {
        return Err(OperatorError::Dimension { expected: n, got: bounds.dim() });
    }
    let row = |i: usize| pop.row(i).to_vec();
    let x = row(target);
    let mut out = Array2::zeros((t, n));
    for (trial, strategy) in strategy_schedule(t, config, rng).into_iter().enumerate() {
        let (f, cr) = config.param_pool[rng.random_range(0..config.param_pool.len())];
        let idx = distinct_donors(rows, target, strategy.donors(), rng);
        let donors: Vec<Vec<f64>> = idx.iter().map(|&i| row(i)).collect();
        let refs: Vec<&[f64]> = donors.iter().map(Vec::as_slice).collect();
        let mut u = match strategy {
            Strategy::CurrentToRand1 => {
                let k = rng.random::<f64>();
                mutate(strategy, &x, &refs, f, k)
            }
            _ => {
                let v = mutate(strategy, &x, &refs, f, 0.0);
                binomial_crossover(&x, &v, cr, rng)
            }
        };
        repair_bounds(&mut u, bounds, Some(&x), rng);
        out.row_mut(trial).assign(&ndarray::ArrayView1::from(&u));
    }
    Ok(out)
}

#[cfg(test)]
pub(super) fn donor_indices_for_test<R: Rng + ?Sized>(n: usize, exclude: usize, count: usize, rng: &mut R) -> Vec<usize> {
    distinct_donors(n, exclude, count, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::Strategy;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rand1_mutant_by_hand() {
        let v = mutate(Strategy::Rand1Bin, &[9.0, 9.0], &[&[0.0, 0.0], &[1.0, 2.0], &[0.0, 1.0]], 0.5, 0.0);
        assert_eq!(v, vec![0.5, 0.5]);
        let u = binomial_crossover(&[9.0, 9.0], &v, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(u, v);
    }

    #[test]
    fn zero_scale_copies_first_donor() {
        let r1: &[f64] = &[0.3, -0.2, 0.1];
        let v = mutate(Strategy::Rand1Bin, &[5.0; 3], &[r1, &[1.0; 3], &[2.0; 3]], 0.0, 0.0);
        assert_eq!(v, r1);
        let r2 = mutate(Strategy::Rand2Bin, &[5.0; 3], &[r1, &[1.0; 3], &[2.0; 3], &[4.0; 3], &[3.0; 3]], 0.0, 0.0);
        assert_eq!(r2, r1);
    }

    #[test]
    fn current_to_rand_endpoints() {
        let x: &[f64] = &[1.0, 1.0];
        let d: [&[f64]; 3] = [&[3.0, -1.0], &[0.5, 0.5], &[0.0, 0.0]];
        assert_eq!(mutate(Strategy::CurrentToRand1, x, &d, 0.0, 0.0), x);
        assert_eq!(mutate(Strategy::CurrentToRand1, x, &d, 0.0, 1.0), vec![3.0, -1.0]);
        assert_eq!(mutate(Strategy::CurrentToRand1, x, &d, 2.0, 0.0), vec![2.0, 2.0]);
    }

    #[test]
    fn crossover_keeps_at_least_one_mutant_gene() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let u = binomial_crossover(&[0.0; 6], &[1.0; 6], 0.0, &mut rng);
            assert_eq!(u.iter().filter(|&&g| g == 1.0).count(), 1);
        }
    }

    fn population(rows: usize, n: usize, seed: u64) -> (Array2<f64>, Bounds) {
        let b = Bounds { low: vec![-5.0; n], high: vec![5.0; n] };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (Array2::from_shape_fn((rows, n), |_| rng.random_range(-5.0..5.0)), b)
    }

    #[test]
    fn trials_in_bounds_and_seeded() {
        let (pop, b) = population(10, 4, 1);
        let cfg = CodeConfig::default();
        let a = code_trials(2, pop.view(), &b, 3, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let c = code_trials(2, pop.view(), &b, 3, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.dim(), (3, 4));
        for r in a.rows() {
            assert!(b.contains(&r.to_vec()));
        }
        let five = code_trials(0, pop.view(), &b, 5, &cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(five.nrows(), 5);
    }

    #[test]
    fn small_population_is_an_arity_error() {
        let (pop, b) = population(5, 2, 0);
        let err = code_trials(0, pop.view(), &b, 3, &CodeConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(err.unwrap_err(), OperatorError::Arity { need: 6, got: 5 });
    }

    #[test]
    fn schedule_cycles_for_three_trials() {
        let cfg = CodeConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(strategy_schedule(3, &cfg, &mut rng), Strategy::ALL.to_vec());
        }
        let many = strategy_schedule(3000, &cfg, &mut rng);
        for s in Strategy::ALL {
            let share = many.iter().filter(|&&m| m == s).count() as f64 / 3000.0;
            assert!((share - 1.0 / 3.0).abs() < 0.05);
        }
    }

    #[test]
    fn trial_order_follows_schedule() {
        // with CR = 1 and F = 0: rand/1 and rand/2 copy r1 (a population
        // row), current-to-rand lies on the segment target..r1
        let (pop, b) = population(8, 3, 2);
        let cfg = CodeConfig { param_pool: [(0.0, 1.0); 3], ..Default::default() };
        let rows: Vec<Vec<f64>> = pop.rows().into_iter().map(|r| r.to_vec()).collect();
        for seed in 0..20 {
            let tr = code_trials(4, pop.view(), &b, 3, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(rows.contains(&tr.row(0).to_vec()));
            assert!(rows.contains(&tr.row(1).to_vec()));
            assert_ne!(tr.row(0).to_vec(), rows[4]);
        }
    }

    proptest! {
        #[test]
        fn donors_are_distinct(n in 6usize..60, seed in any::<u64>(), count in 1usize..=5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let target = rng.random_range(0..n);
            let d = donor_indices_for_test(n, target, count, &mut rng);
            prop_assert_eq!(d.len(), count);
            prop_assert!(!d.contains(&target));
            let mut s = d.clone();
            s.sort();
            s.dedup();
            prop_assert_eq!(s.len(), count);
        }

        #[test]
        fn trials_always_inside(seed in any::<u64>(), t in 1usize..6) {
            let (pop, b) = population(12, 3, seed);
            let tr = code_trials(0, pop.view(), &b, t, &CodeConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for r in tr.rows() {
                prop_assert!(b.contains(&r.to_vec()));
            }
        }
    }
}
