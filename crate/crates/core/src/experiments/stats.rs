use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ExperimentError;

/// Largest per-sample size for which the null distribution is enumerated.
const EXACT_LIMIT: usize = 8;

/// Outcome of comparing a reference sample `a` against `b` (minimisation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// `b` is significantly better than `a`.
    #[serde(rename = "+")]
    Plus,
    /// `b` is significantly worse than `a`.
    #[serde(rename = "−")]
    Minus,
    #[serde(rename = "≈")]
    Tie,
}

impl Verdict {
    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Plus => "+",
            Verdict::Minus => "−",
            Verdict::Tie => "≈",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Verdict::Plus => Verdict::Minus,
            Verdict::Minus => Verdict::Plus,
            Verdict::Tie => Verdict::Tie,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub verdict: Verdict,
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test with midranks.
///
/// When both samples have at most eight values the p-value comes from the
/// exact permutation distribution of the rank sum (ties included); larger
/// samples use the normal approximation with tie and continuity
/// corrections. The verdict is `−` when `a` is significantly lower
/// (better) by median, `+` when significantly higher.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<RankSumTest, ExperimentError> {
    if a.len() < 3 || b.len() < 3 {
        return Err(ExperimentError::SampleSize { a: a.len(), b: b.len() });
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(ExperimentError::Stats("samples contain NaN".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let doubled = doubled_midranks(&pooled);
    let rank_sum_a2: u64 = doubled[..n1].iter().sum();
    let u = rank_sum_a2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;
    let p_value = if n1 <= EXACT_LIMIT && n2 <= EXACT_LIMIT {
        exact_p_value(&doubled, n1, rank_sum_a2)
    } else {
        normal_p_value(&pooled, n1, n2, u)
    };
    let verdict = if p_value < alpha {
        let (ma, mb) = (median(a), median(b));
        if ma < mb {
            Verdict::Minus
        } else if ma > mb {
            Verdict::Plus
        } else {
            Verdict::Tie
        }
    } else {
        Verdict::Tie
    };
    Ok(RankSumTest { u, p_value, verdict })
}

/// Twice the 1-based midrank of every value, so ties stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank ((i + 1) + (j + 1)) / 2
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

/// `P(|S - E[S]| >= |s_obs - E[S]|)` over all `C(N, n1)` equally likely
/// assignments of the pooled (doubled) ranks to the first sample.
fn exact_p_value(doubled: &[u64], n1: usize, observed: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let max = total as usize;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; max + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in doubled {
        let r = r as usize;
        for k in (1..=n1).rev() {
            for s in (r..=max).rev() {
                let add = ways[k - 1][s - r];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let n = doubled.len() as u64;
    // doubled expectation n1 (N + 1), kept integral by comparing 2S - 2E
    let centre = n1 as i64 * (n as i64 + 1);
    let obs_dev = (observed as i64 - centre).abs();
    let mut extreme = 0.0;
    let mut all = 0.0;
    for (s, &w) in ways[n1].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        all += w;
        if (s as i64 - centre).abs() >= obs_dev {
            extreme += w;
        }
    }
    (extreme / all).min(1.0)
}

fn normal_p_value(pooled: &[f64], n1: usize, n2: usize, u: f64) -> f64 {
    let n = (n1 + n2) as f64;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * std_normal.sf(z)).min(1.0)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (ddof = 1); zero for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}
