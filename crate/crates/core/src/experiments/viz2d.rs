use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::median;
use super::ExperimentError;
use crate::data::TrainingSet;
use crate::frameworks::{train, FrameworkError};
use crate::problems::Benchmark;
use crate::surrogate::{accuracy, r2_score, rows_to_matrix, Backend, Surrogate, SurrogateConfig, Task};

/// Lattice scores for both backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viz2dScores {
    pub kan_r2: f64,
    pub mlp_r2: f64,
    pub kan_accuracy: f64,
    pub mlp_accuracy: f64,
}

/// Truth and model outputs over a square lattice of the problem's box.
#[derive(Debug, Clone, PartialEq)]
pub struct Viz2d {
    /// Lattice points, x1 varying slowest.
    pub points: Array2<f64>,
    pub truth: Vec<f64>,
    pub kan_reg: Vec<f64>,
    pub mlp_reg: Vec<f64>,
    pub truth_label: Vec<u8>,
    pub kan_label: Vec<u8>,
    pub mlp_label: Vec<u8>,
    pub scores: Viz2dScores,
}

/// `resolution` evenly spaced values from `low` to `high` inclusive.
fn axis(low: f64, high: f64, resolution: usize) -> Vec<f64> {
    let last = (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            let s = i as f64 / last;
            low * (1.0 - s) + high * s
        })
        .collect()
}

/// Trains KAN and MLP regressors and classifiers on `samples` uniform points
/// of the 2-D problem and scores them on a `resolution`² lattice.
///
/// Class 1 means a value at or below the median of the training values,
/// both for the training labels and for the lattice truth.
pub fn compute_viz2d(
    problem: Benchmark,
    samples: usize,
    steps: usize,
    resolution: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Viz2d, ExperimentError> {
    let config = SurrogateConfig { steps, ..SurrogateConfig::default() };
    compute_viz2d_with(problem, samples, &config, resolution, rng)
}

/// [`compute_viz2d`] with explicit surrogate settings.
pub fn compute_viz2d_with(
    problem: Benchmark,
    samples: usize,
    config: &SurrogateConfig,
    resolution: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Viz2d, ExperimentError> {
    if resolution < 2 {
        return Err(ExperimentError::Config(format!("resolution must be at least 2, got {resolution}")));
    }
    if samples < 2 {
        return Err(ExperimentError::Config(format!("need at least 2 samples, got {samples}")));
    }
    let bounds = problem.bounds(2);
    let x = rows_to_matrix(&(0..samples).map(|_| bounds.sample(rng)).collect::<Vec<_>>());
    let y: Vec<f64> = x.rows().into_iter().map(|r| problem.eval(&r.to_vec())).collect::<Result<_, _>>()?;
    let cut = median(&y);
    let labels: Vec<u8> = y.iter().map(|&v| u8::from(v <= cut)).collect();
    let reg_data = TrainingSet::regression(x.clone(), y).map_err(FrameworkError::from)?;
    let cla_data = TrainingSet::classification(x, labels).map_err(FrameworkError::from)?;

    let mut fitted = Vec::with_capacity(4);
    for (backend, task, data) in [
        (Backend::Kan, Task::Regression, &reg_data),
        (Backend::Mlp, Task::Regression, &reg_data),
        (Backend::Kan, Task::Classification, &cla_data),
        (Backend::Mlp, Task::Classification, &cla_data),
    ] {
        let mut s = Surrogate::new(backend, task, config.clone());
        train(&mut s, data, rng)?;
        fitted.push(s);
    }

    let a1 = axis(bounds.low[0], bounds.high[0], resolution);
    let a2 = axis(bounds.low[1], bounds.high[1], resolution);
    let points = Array2::from_shape_fn((resolution * resolution, 2), |(i, j)| {
        if j == 0 {
            a1[i / resolution]
        } else {
            a2[i % resolution]
        }
    });
    let truth: Vec<f64> = points.rows().into_iter().map(|r| problem.eval(&r.to_vec())).collect::<Result<_, _>>()?;
    let truth_label: Vec<u8> = truth.iter().map(|&v| u8::from(v <= cut)).collect();
    let kan_reg = fitted[0].predict_values(points.view())?;
    let mlp_reg = fitted[1].predict_values(points.view())?;
    let (kan_label, _) = fitted[2].predict_labels(points.view())?;
    let (mlp_label, _) = fitted[3].predict_labels(points.view())?;
    let scores = Viz2dScores {
        kan_r2: r2_score(&truth, &kan_reg)?,
        mlp_r2: r2_score(&truth, &mlp_reg)?,
        kan_accuracy: accuracy(&truth_label, &kan_label),
        mlp_accuracy: accuracy(&truth_label, &mlp_label),
    };
    Ok(Viz2d { points, truth, kan_reg, mlp_reg, truth_label, kan_label, mlp_label, scores })
}

impl Viz2d {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x1", "x2", "truth", "kan_reg", "mlp_reg", "truth_label", "kan_label", "mlp_label"])?;
        for (i, p) in self.points.rows().into_iter().enumerate() {
            w.write_record([
                p[0].to_string(),
                p[1].to_string(),
                self.truth[i].to_string(),
                self.kan_reg[i].to_string(),
                self.mlp_reg[i].to_string(),
                self.truth_label[i].to_string(),
                self.kan_label[i].to_string(),
                self.mlp_label[i].to_string(),
            ])?;
        }
        w.flush().map_err(ExperimentError::io("lattice"))?;
        Ok(())
    }
}

/// Runs [`compute_viz2d`] and writes `<problem>-lattice.csv` and
/// `<problem>-scores.json` into `dir`. Returns both paths.
pub fn export_viz2d(
    problem: Benchmark,
    samples: usize,
    steps: usize,
    resolution: usize,
    rng: &mut ChaCha8Rng,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    fs::create_dir_all(dir).map_err(ExperimentError::io(dir))?;
    let viz = compute_viz2d(problem, samples, steps, resolution, rng)?;
    let lattice = dir.join(format!("{}-lattice.csv", problem.name()));
    let file = fs::File::create(&lattice).map_err(ExperimentError::io(&lattice))?;
    viz.write_csv(std::io::BufWriter::new(file))?;
    let scores = dir.join(format!("{}-scores.json", problem.name()));
    fs::write(&scores, serde_json::to_string_pretty(&viz.scores)?).map_err(ExperimentError::io(&scores))?;
    Ok((lattice, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn axis_hits_both_ends() {
        let a = axis(-32.768, 32.768, 101);
        assert_eq!(a[0], -32.768);
        assert_eq!(a[100], 32.768);
        assert_eq!(a[50], 0.0);
    }

    #[test]
    fn lattice_shape_and_origin_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = compute_viz2d(Benchmark::Ackley, 50, 5, 101, &mut rng).unwrap();
        assert_eq!(v.points.nrows(), 10201);
        let origin = 50 * 101 + 50;
        assert_eq!((v.points[[origin, 0]], v.points[[origin, 1]]), (0.0, 0.0));
        assert!(v.truth[origin].abs() < 1e-12);
        assert_eq!(v.truth_label[origin], 1);
        for s in [v.scores.kan_accuracy, v.scores.mlp_accuracy] {
            assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn export_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (lattice, scores) = export_viz2d(Benchmark::Ellipsoid, 20, 3, 5, &mut rng, dir.path()).unwrap();
        let text = fs::read_to_string(lattice).unwrap();
        assert_eq!(text.lines().count(), 26);
        assert!(text.starts_with("x1,x2,truth,kan_reg,mlp_reg,truth_label,kan_label,mlp_label\n"));
        let s: Viz2dScores = serde_json::from_str(&fs::read_to_string(scores).unwrap()).unwrap();
        assert!(s.kan_r2.is_finite());
    }

    #[test]
    fn tiny_lattice_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(compute_viz2d(Benchmark::Ackley, 50, 5, 1, &mut rng), Err(ExperimentError::Config(_))));
    }
}
