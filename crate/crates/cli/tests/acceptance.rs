//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::f64::consts::{E, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use kan_saea::data::TrainingSet;
use kan_saea::experiments::{compute_viz2d, median, wilcoxon_rank_sum, Verdict};
use kan_saea::frameworks::{execute, Algorithm, RunConfig, RunResult};
use kan_saea::kan::{bspline_basis, KanConfig, KanNetwork, SplineGrid};
use kan_saea::model::{Head, Trainable};
use kan_saea::problems::Benchmark;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- criterion 1

fn fd_gradient(net: &KanNetwork<f64>, data: &TrainingSet<f64>, h: f64) -> Vec<f64> {
    let base = net.params();
    let mut probe = net.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_params(&p).unwrap();
            let up = probe.loss_and_gradient(data).unwrap().0;
            p[i] = base[i] - h;
            probe.set_params(&p).unwrap();
            let down = probe.loss_and_gradient(data).unwrap().0;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn splines_and_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_pou = 0.0f64;
    for order in 0..=3 {
        for intervals in 1..=20 {
            let lower = rng.random_range(-5.0..0.0);
            let grid = SplineGrid::new(lower, lower + rng.random_range(0.1..10.0), intervals, order).unwrap();
            for s in 0..=200 {
                let x = (grid.lower + (grid.upper - grid.lower) * s as f64 / 200.0).min(grid.upper);
                let sum: f64 = bspline_basis(x, &grid).iter().sum();
                worst_pou = worst_pou.max((sum - 1.0).abs());
            }
        }
    }
    let mut worst_grad = 0.0f64;
    for case in 0..50 {
        let n = rng.random_range(1..=4);
        let hidden = rng.random_range(1..=2 * n + 1);
        let head = if case % 2 == 0 { Head::RegressionScalar } else { Head::ClassificationSoftmax2 };
        let samples = rng.random_range(1..=10);
        let x = ndarray::Array2::from_shape_fn((samples, n), |_| rng.random_range(-1.5..1.5));
        let mut net = KanNetwork::from_data(&[n, hidden, head.output_dim()], head, &x, &KanConfig::default(), &mut rng).unwrap();
        let p: Vec<f64> = net.params().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        net.set_params(&p).unwrap();
        let data = match head {
            Head::RegressionScalar => {
                TrainingSet::regression(x.clone(), (0..samples).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
            }
            Head::ClassificationSoftmax2 => {
                TrainingSet::classification(x.clone(), (0..samples).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
            }
        };
        let g = net.loss_and_gradient(&data).unwrap().1;
        let fd = fd_gradient(&net, &data, 1e-5);
        let scale = fd.iter().fold(1e-8f64, |m, v| m.max(v.abs()));
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max);
        worst_grad = worst_grad.max(err);
    }
    check(
        worst_pou <= 1e-12 && worst_grad < 1e-4,
        format!("partition-of-unity max error {worst_pou:.2e}, gradient max relative error {worst_grad:.2e}"),
    )
}

// ---------------------------------------------------------------- criterion 2

fn oracle(b: Benchmark, x: &[f64]) -> f64 {
    let n = x.len() as f64;
    match b {
        Benchmark::Ellipsoid => {
            let mut s = 0.0;
            for (i, &v) in x.iter().enumerate() {
                s += (i + 1) as f64 * v * v;
            }
            s
        }
        Benchmark::Rosenbrock => {
            let mut s = 0.0;
            for i in 0..x.len() - 1 {
                let a = x[i + 1] - x[i] * x[i];
                s += 100.0 * a * a + (x[i] - 1.0) * (x[i] - 1.0);
            }
            s
        }
        Benchmark::Ackley => {
            let mut sq = 0.0;
            let mut cs = 0.0;
            for &v in x {
                sq += v * v;
                cs += (2.0 * PI * v).cos();
            }
            -20.0 * (-0.2 * (sq / n).sqrt()).exp() - (cs / n).exp() + 20.0 + E
        }
        Benchmark::Griewank => {
            let mut sq = 0.0;
            let mut prod = 1.0;
            for (i, &v) in x.iter().enumerate() {
                sq += v * v;
                prod *= (v / ((i + 1) as f64).sqrt()).cos();
            }
            1.0 + sq / 4000.0 - prod
        }
    }
}

fn benchmark_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut worst_min = 0.0f64;
    for b in Benchmark::ALL {
        for _ in 0..1000 {
            let n = rng.random_range(2..=30);
            let x = b.bounds(n).sample(&mut rng);
            let got: f64 = b.eval(&x).unwrap();
            let want = oracle(b, &x);
            worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
        for n in [2, 5, 10, 30] {
            worst_min = worst_min.max(b.eval::<f64>(&b.optimum(n)).unwrap().abs());
        }
    }
    check(
        worst <= 1e-12 && worst_min <= 1e-12,
        format!("max relative deviation {worst:.2e}, max |f(x*)| {worst_min:.2e}"),
    )
}

// ------------------------------------------------------------- criteria 3 & 4

/// Per function: seeds where KAN beats MLP on lattice R², and where KAN
/// accuracy is at least MLP accuracy.
fn lattice_wins() -> Vec<(Benchmark, usize, usize)> {
    Benchmark::ALL
        .iter()
        .map(|&b| {
            let (mut reg, mut cla) = (0, 0);
            for seed in 0..20 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = compute_viz2d(b, 50, 50, 101, &mut rng).unwrap();
                reg += usize::from(v.scores.kan_r2 > v.scores.mlp_r2);
                cla += usize::from(v.scores.kan_accuracy >= v.scores.mlp_accuracy);
            }
            (b, reg, cla)
        })
        .collect()
}

fn dominance(wins: &[(Benchmark, usize)], what: &str) -> Outcome {
    let parts: Vec<String> = wins.iter().map(|(b, w)| format!("{} {w}/20", b.name())).collect();
    check(wins.iter().all(|&(_, w)| w >= 15), format!("KAN {what}: {}", parts.join(", ")))
}

// ------------------------------------------------------------- criteria 5-7

fn run_seeds(config: &RunConfig, seeds: u64) -> Vec<RunResult> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..seeds).map(|seed| s.spawn(move || execute(config, seed).unwrap())).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn budget_violations(results: &[RunResult]) -> usize {
    results
        .iter()
        .filter(|r| {
            let fes = r.config.settings.fes_max;
            let exact = r.fes_used() == fes && r.trace.len() == fes;
            let monotone = r.trace.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 == w[0].0 + 1);
            !(exact && monotone && r.trace.last().map(|t| t.1) == Some(r.best_value))
        })
        .count()
}

fn best_values(results: &[RunResult]) -> Vec<f64> {
    results.iter().map(|r| r.best_value).collect()
}

fn pre_selection_band(kan: &[RunResult], random: &[RunResult]) -> Outcome {
    let (a, b) = (best_values(kan), best_values(random));
    let (ma, mb) = (median(&a), median(&b));
    let test = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
    check(
        ma <= 1e-2 && ma < mb && test.verdict == Verdict::Minus,
        format!(
            "kan-sps-reg median {ma:.3e}, sps-random median {mb:.3e}, p = {:.2e}, rank-sum verdict {}",
            test.p_value, test.verdict
        ),
    )
}

fn archive_selection_band(sas: &[RunResult]) -> Outcome {
    let v = best_values(sas);
    let m = median(&v);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    check(m <= 1e-3, format!("kan-sas-1 median {m:.3e} (range {lo:.2e}..{hi:.2e}), threshold 1e-3"))
}

// ---------------------------------------------------------------- criterion 8

fn midranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|&v| {
            let below = pooled.iter().filter(|&&w| w < v).count() as f64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided permutation p-value of the rank-sum statistic, by enumerating
/// every way of assigning the pooled ranks to the first sample.
fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let n = pooled.len();
    let centre = a.len() as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..a.len()].iter().sum::<f64>() - centre).abs();
    let (mut hit, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let s: f64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        total += 1;
        hit += u64::from((s - centre).abs() >= observed - 1e-9);
    }
    hit as f64 / total as f64
}

fn draw(rng: &mut ChaCha8Rng, len: usize, ties: bool) -> Vec<f64> {
    (0..len)
        .map(|_| if ties { f64::from(rng.random_range(0..5u8)) } else { rng.random_range(-1.0..1.0) })
        .collect()
}

fn wilcoxon_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for na in 3..=8 {
        for nb in 3..=8 {
            for rep in 0..6 {
                let ties = rep % 2 == 1;
                let mut a = draw(&mut rng, na, ties);
                let b = draw(&mut rng, nb, ties);
                if rep == 4 {
                    // shifted sample: small p-values
                    a.iter_mut().for_each(|v| *v += 1.5);
                }
                let got = wilcoxon_rank_sum(&a, &b, 0.05).unwrap().p_value;
                worst = worst.max((got - permutation_p(&a, &b)).abs());
            }
        }
    }
    let mut broken = 0;
    for i in 0..1000 {
        let na = rng.random_range(3..=30);
        let nb = rng.random_range(3..=30);
        let ties = i % 3 == 0;
        let shift = rng.random_range(-1.0..1.0);
        let a: Vec<f64> = draw(&mut rng, na, ties).into_iter().map(|v| v + shift).collect();
        let b = draw(&mut rng, nb, ties);
        let ab = wilcoxon_rank_sum(&a, &b, 0.05).unwrap().verdict;
        let ba = wilcoxon_rank_sum(&b, &a, 0.05).unwrap().verdict;
        let c = rng.random_range(0.01..100.0);
        let sa: Vec<f64> = a.iter().map(|v| v * c).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * c).collect();
        let scaled = wilcoxon_rank_sum(&sa, &sb, 0.05).unwrap().verdict;
        if ba != ab.flipped() || scaled != ab {
            broken += 1;
        }
    }
    check(
        worst <= 0.02 && broken == 0,
        format!("max |p - exact| {worst:.2e} over sizes 3..8 x 3..8; {broken}/1000 symmetry or scaling violations"),
    )
}

// ---------------------------------------------------------------- criterion 9

fn cli_json(algo: Algorithm, seed: u64) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_kan-saea"))
        .args(["run", "--algo", algo.id(), "--problem", "ackley", "--dim", "3", "--seed"])
        .arg(seed.to_string())
        .args(["--fes-max", "40", "--pop", "10", "--tau", "10"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().lines().filter(|l| !l.trim_start().starts_with("\"wall_time\"")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    for algo in Algorithm::ALL {
        if cli_json(algo, 17) != cli_json(algo, 17) {
            differing.push(algo.id());
        }
    }
    check(
        differing.is_empty(),
        format!("{} algorithm ids, differing: {}", Algorithm::ALL.len(), if differing.is_empty() { "none".to_string() } else { differing.join(", ") }),
    )
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |id: usize, name: &str, started: Instant, limit: Duration, outcome: Outcome| {
        let elapsed = started.elapsed();
        let pass = outcome.pass && elapsed <= limit;
        println!(
            "criterion {id} {}: {name}: {} [{:.1}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    };

    let t = Instant::now();
    report(1, "splines and gradients", t, Duration::from_secs(10), splines_and_gradients());
    let t = Instant::now();
    report(2, "benchmark oracles", t, Duration::from_secs(1), benchmark_oracles());

    let t = Instant::now();
    let wins = lattice_wins();
    let shared = t.elapsed() / 2;
    let reg: Vec<_> = wins.iter().map(|&(b, r, _)| (b, r)).collect();
    let cla: Vec<_> = wins.iter().map(|&(b, _, c)| (b, c)).collect();
    report(3, "2-D regression dominance", Instant::now() - shared, Duration::from_secs(300), dominance(&reg, "R² > MLP R²"));
    report(4, "2-D classification dominance", Instant::now() - shared, Duration::from_secs(300), dominance(&cla, "accuracy >= MLP accuracy"));

    let t = Instant::now();
    let kan = run_seeds(&RunConfig::new(Algorithm::KanSpsReg, Benchmark::Ellipsoid, 5), 10);
    let random = run_seeds(&RunConfig::new(Algorithm::SpsRandom, Benchmark::Ellipsoid, 5), 10);
    report(5, "pre-selection band", t, Duration::from_secs(30 * 60), pre_selection_band(&kan, &random));
    let t = Instant::now();
    let sas = run_seeds(&RunConfig::new(Algorithm::KanSas1, Benchmark::Ellipsoid, 5), 10);
    report(6, "archive-selection band", t, Duration::from_secs(20 * 60), archive_selection_band(&sas));

    let t = Instant::now();
    let all: Vec<RunResult> = kan.into_iter().chain(random).chain(sas).collect();
    let bad = budget_violations(&all);
    report(7, "budget exactness", t, Duration::from_secs(1), check(bad == 0, format!("{} runs checked, {bad} violations", all.len())));

    let t = Instant::now();
    report(8, "rank-sum correctness", t, Duration::from_secs(30), wilcoxon_correctness());
    let t = Instant::now();
    report(9, "run determinism", t, Duration::from_secs(300), determinism());

    if !failed.is_empty() {
        println!("acceptance: {} of 9 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}
