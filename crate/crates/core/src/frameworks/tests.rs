use super::*;
use crate::problems::Benchmark;

fn small(algorithm: Algorithm, fes_max: usize) -> RunConfig {
    RunConfig { pop_size: 10, tau: 10, fes_max, train_steps: 10, ..RunConfig::new(algorithm, Benchmark::Ellipsoid, 2) }
}

fn assert_trace(r: &RunResult, fes_max: usize) {
    assert_eq!(r.trace.len(), fes_max);
    assert_eq!(r.fes_used(), fes_max);
    for (i, w) in r.trace.windows(2).enumerate() {
        assert_eq!(w[0].0, i + 1);
        assert!(w[1].1 <= w[0].1);
    }
    assert_eq!(r.trace.last().unwrap().1, r.best_value);
    assert_eq!(Benchmark::Ellipsoid.eval(&r.best_solution).unwrap(), r.best_value);
}

#[test]
fn archive_stays_sorted_and_stable() {
    let mut a = Archive::default();
    for (i, v) in [3.0, 1.0, 2.0, 1.0].into_iter().enumerate() {
        a.insert(vec![i as f64], v);
    }
    let order: Vec<f64> = a.entries().iter().map(|e| e.0[0]).collect();
    assert_eq!(order, vec![1.0, 3.0, 2.0, 0.0]);
    assert_eq!(a.top(2).len(), 2);
    assert_eq!(a.top(10).len(), 4);
    assert_eq!(a.top_population(3).unwrap().values(), &[1.0, 1.0, 2.0]);
}

#[test]
fn pool_capacity_is_enforced() {
    assert!(UnevaluatedPool::new(Array2::zeros((3, 2)), 2).is_err());
    assert_eq!(UnevaluatedPool::new(Array2::zeros((2, 2)), 2).unwrap().len(), 2);
}

#[test]
fn population_rejects_misaligned_rows() {
    assert!(EvaluatedPopulation::new(Array2::zeros((3, 2)), vec![0.0; 2]).is_err());
    assert!(EvaluatedPopulation::new(Array2::zeros((1, 2)), vec![f64::NAN]).is_err());
}

#[test]
fn every_pre_selection_variant_spends_the_exact_budget() {
    // 10 + 10 * 4 + 3: stops three members into a generation
    for algo in [Algorithm::KanSpsReg, Algorithm::KanSpsCla, Algorithm::MlpSpsReg, Algorithm::MlpSpsCla, Algorithm::SpsRandom] {
        let r = execute(&small(algo, 53), 1).unwrap();
        assert_trace(&r, 53);
    }
}

#[test]
fn archive_selection_spends_one_evaluation_per_iteration() {
    for algo in [Algorithm::KanSas1, Algorithm::KanSas2] {
        let r = execute(&small(algo, 25), 2).unwrap();
        assert_trace(&r, 25);
    }
    let mut cfg = small(Algorithm::KanSas1, 14);
    cfg.swap_sas_variants = true;
    assert_trace(&execute(&cfg, 2).unwrap(), 14);
}

#[test]
fn pre_selection_improves_on_its_initial_population() {
    let r = execute(&small(Algorithm::KanSpsReg, 200), 3).unwrap();
    assert!(r.best_value < r.trace[9].1);
}

#[test]
fn seeds_reproduce_and_differ() {
    let cfg = small(Algorithm::KanSas2, 16);
    let mut a = execute(&cfg, 7).unwrap();
    let mut b = execute(&cfg, 7).unwrap();
    a.wall_time = 0.0;
    b.wall_time = 0.0;
    assert_eq!(a.to_json(), b.to_json());
    let c = execute(&cfg, 8).unwrap();
    assert_ne!(a.best_value, c.best_value);
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut cfg = small(Algorithm::KanSpsReg, 100);
    cfg.pop_size = 5;
    assert!(matches!(execute(&cfg, 0), Err(FrameworkError::Config(_))));
    let cfg = small(Algorithm::SpsRandom, 10);
    assert!(matches!(execute(&cfg, 0), Err(FrameworkError::Config(_))));
    let mut cfg = small(Algorithm::KanSas1, 20);
    cfg.problem = Benchmark::Rosenbrock;
    cfg.n = 1;
    assert!(matches!(execute(&cfg, 0), Err(FrameworkError::Problem(_))));
}

#[test]
fn result_json_layout() {
    let r = execute(&small(Algorithm::SpsRandom, 12), 0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["algorithm", "problem", "n", "seed", "config", "best_value", "best_solution", "trace", "wall_time"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["algorithm"], "sps-random");
    assert_eq!(v["problem"], "ellipsoid");
    assert_eq!(v["trace"][0][0], 1);
    assert_eq!(v["config"]["fingerprint"].as_str().unwrap().len(), 16);
    let back: RunResult = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn fingerprint_tracks_settings() {
    let a = small(Algorithm::KanSpsReg, 100);
    let mut b = a.clone();
    assert_eq!(a.fingerprint(), b.fingerprint());
    b.trials = 4;
    assert_ne!(a.fingerprint(), b.fingerprint());
}

#[test]
fn algorithm_ids_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{}\"", a.id()));
    }
    assert!("kan-sas-3".parse::<Algorithm>().is_err());
}
