use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kan_saea::experiments::{
    build_comparison, export_viz2d, load_results, mean_best_report, result_file_name, run_campaign, write_report,
    ExperimentConfig,
};
use kan_saea::frameworks::{execute, Algorithm, RunConfig};
use kan_saea::problems::Benchmark;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "kan-saea", version, about = "KAN surrogates for expensive evolutionary optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one problem and emit its result JSON.
    Run {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        problem: Benchmark,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        fes_max: Option<usize>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        tau: Option<usize>,
        /// Directory for the result file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every repetition described by a JSON or TOML config.
    Campaign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a mean/std/rank table with rank-sum verdicts from result JSON files.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        reference: Algorithm,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export truth and model surfaces over a 2-D lattice.
    Viz2d {
        #[arg(long)]
        problem: Benchmark,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Prints a line, treating a closed stdout (e.g. piped into `head`) as success.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { algo, problem, dim, seed, fes_max, pop, trials, tau, out } => {
            let mut config = RunConfig::new(algo, problem, dim);
            if let Some(v) = fes_max {
                config.fes_max = v;
            }
            if let Some(v) = pop {
                config.pop_size = v;
            }
            if let Some(v) = trials {
                config.trials = v;
            }
            if let Some(v) = tau {
                config.tau = v;
            }
            let result = execute(&config, seed)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    let path = dir.join(result_file_name(&config, seed));
                    fs::write(&path, result.to_json()).with_context(|| format!("writing {}", path.display()))?;
                    emit(&path.display().to_string());
                }
                None => emit(&result.to_json()),
            }
        }
        Command::Campaign { config } => {
            let config = ExperimentConfig::load(&config)?;
            let summary = run_campaign(&config)?;
            let report = summary.csv_path.with_extension("summary.csv");
            let rows = mean_best_report(fs::File::open(&summary.csv_path)?)?;
            write_report(&rows, fs::File::create(&report).with_context(|| format!("writing {}", report.display()))?)?;
            emit(&format!(
                "{} computed, {} reused; {} and {}",
                summary.computed,
                summary.skipped,
                summary.csv_path.display(),
                report.display()
            ));
        }
        Command::Compare { inputs, reference, alpha, out } => {
            let results = load_results(&inputs)?;
            let table = build_comparison(&results, reference, alpha)?;
            let file = fs::File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            table.write_csv(file)?;
            emit(&out.display().to_string());
        }
        Command::Viz2d { problem, samples, steps, resolution, seed, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lattice, scores) = export_viz2d(problem, samples, steps, resolution, &mut rng, &out)?;
            emit(&format!("{} {}", lattice.display(), scores.display()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
