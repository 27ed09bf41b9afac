use std::collections::BTreeMap;
use std::io::Write;

use super::stats::{mean, sample_std, wilcoxon_rank_sum, Verdict};
use super::ExperimentError;
use crate::frameworks::{Algorithm, RunResult};
use crate::problems::Benchmark;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    /// 1-based position by ascending mean within the row.
    pub rank: usize,
    /// Against the reference; `None` for the reference itself or when a
    /// sample is too small to test.
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub problem: Benchmark,
    pub n: usize,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub plus: usize,
    pub minus: usize,
    pub tie: usize,
}

/// Mean (std) [rank] per problem row and algorithm column, with verdicts
/// against a reference algorithm and per-algorithm summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub reference: Algorithm,
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<Row>,
    pub mean_rank: Vec<f64>,
    pub tallies: Vec<Tally>,
}

/// Groups final best values by `(problem, n)` and algorithm and compares
/// every algorithm with `reference`.
pub fn build_comparison(
    results: &[RunResult],
    reference: Algorithm,
    alpha: f64,
) -> Result<ComparisonTable, ExperimentError> {
    let mut groups: BTreeMap<(String, usize), BTreeMap<Algorithm, Vec<f64>>> = BTreeMap::new();
    let mut problems: BTreeMap<String, Benchmark> = BTreeMap::new();
    for r in results {
        problems.insert(r.problem.name().to_string(), r.problem);
        groups
            .entry((r.problem.name().to_string(), r.n))
            .or_default()
            .entry(r.algorithm)
            .or_default()
            .push(r.best_value);
    }
    let mut algorithms: Vec<Algorithm> = groups.values().flat_map(|g| g.keys().copied()).collect();
    algorithms.sort();
    algorithms.dedup();
    if !algorithms.contains(&reference) {
        return Err(ExperimentError::Shape(format!("reference {reference} has no results")));
    }
    // reference first, then the rest in a fixed order
    algorithms.retain(|&a| a != reference);
    algorithms.insert(0, reference);

    let mut rows = Vec::new();
    for ((problem, n), by_algo) in &groups {
        let samples: Vec<&Vec<f64>> = algorithms
            .iter()
            .map(|a| {
                by_algo.get(a).ok_or_else(|| ExperimentError::Shape(format!("{a} has no runs for {problem} n={n}")))
            })
            .collect::<Result<_, _>>()?;
        let reps = samples[0].len();
        if samples.iter().any(|s| s.len() != reps) {
            let counts: Vec<String> = algorithms.iter().zip(&samples).map(|(a, s)| format!("{a}={}", s.len())).collect();
            return Err(ExperimentError::Shape(format!(
                "unequal repetitions for {problem} n={n}: {}",
                counts.join(", ")
            )));
        }
        let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
        let mut order: Vec<usize> = (0..algorithms.len()).collect();
        order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
        let mut ranks = vec![0; algorithms.len()];
        for (pos, &i) in order.iter().enumerate() {
            ranks[i] = pos + 1;
        }
        let mut cells = Vec::with_capacity(algorithms.len());
        for (k, s) in samples.iter().enumerate() {
            let verdict = if k == 0 || reps < 3 {
                None
            } else {
                Some(wilcoxon_rank_sum(samples[0], s, alpha)?.verdict)
            };
            cells.push(Cell { mean: means[k], std: sample_std(s), rank: ranks[k], verdict });
        }
        rows.push(Row { problem: problems[problem], n: *n, cells });
    }

    let mean_rank = (0..algorithms.len())
        .map(|k| rows.iter().map(|r| r.cells[k].rank as f64).sum::<f64>() / rows.len().max(1) as f64)
        .collect();
    let tallies = (0..algorithms.len())
        .map(|k| {
            let mut t = Tally::default();
            for r in &rows {
                match r.cells[k].verdict {
                    Some(Verdict::Plus) => t.plus += 1,
                    Some(Verdict::Minus) => t.minus += 1,
                    Some(Verdict::Tie) => t.tie += 1,
                    None => {}
                }
            }
            t
        })
        .collect();
    Ok(ComparisonTable { reference, algorithms, rows, mean_rank, tallies })
}

impl ComparisonTable {
    /// Long-form CSV: one line per cell, then one `summary` line per
    /// algorithm carrying its mean rank and `+/−/≈` counts.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["problem", "n", "algorithm", "mean", "std", "rank", "verdict"])?;
        for row in &self.rows {
            for (a, c) in self.algorithms.iter().zip(&row.cells) {
                w.write_record([
                    row.problem.name().to_string(),
                    row.n.to_string(),
                    a.id().to_string(),
                    format!("{:.6e}", c.mean),
                    format!("{:.6e}", c.std),
                    c.rank.to_string(),
                    c.verdict.map_or(String::new(), |v| v.symbol().to_string()),
                ])?;
            }
        }
        for (k, a) in self.algorithms.iter().enumerate() {
            let t = self.tallies[k];
            let tally = if k == 0 { String::new() } else { format!("{}/{}/{}", t.plus, t.minus, t.tie) };
            w.write_record([
                "summary".to_string(),
                String::new(),
                a.id().to_string(),
                String::new(),
                String::new(),
                format!("{:.3}", self.mean_rank[k]),
                tally,
            ])?;
        }
        w.flush().map_err(ExperimentError::io("comparison"))?;
        Ok(())
    }
}
