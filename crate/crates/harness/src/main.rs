use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use margin_cma::benchmarks::Benchmark;
use margin_cma::cma::TerminationReason;
use margin_harness::aggregate::aggregate;
use margin_harness::config::{Algorithm, ExperimentConfig};
use margin_harness::error::HarnessError;
use margin_harness::trial::{run_trials, TrialRecord};
use margin_harness::{mo_run, output, sweep};

#[derive(Parser)]
#[command(name = "mi-bench", version, about = "Mixed-integer CMA-ES benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Independent single-objective trials; writes trials.csv and summary.csv.
    Run(Common),
    /// Success rate over the α = N^-m λ^-n grid; writes sweep.csv.
    SweepAlpha(Common),
    /// Bi-objective runs; writes mo_summary.csv, mo_trace_<k>.csv and mo_final_<k>.csv.
    MoRun(Common),
    /// Single-objective trials with per-iteration distribution traces.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Keep every k-th iteration.
        #[arg(long)]
        every: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm when no config file is given.
    #[arg(long)]
    algorithm: Option<String>,
    /// Benchmark when no config file is given.
    #[arg(long)]
    benchmark: Option<String>,
    /// Dimension when no config file is given.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory, default `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, HarnessError> {
    [
        Algorithm::CmaEsMargin,
        Algorithm::CmaEsIm,
        Algorithm::CmaEsImBox,
        Algorithm::MoCmaEs,
        Algorithm::MoCmaEsMargin,
    ]
    .into_iter()
    .find(|a| a.as_str() == s)
    .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?}")))
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let missing = |what: &str| HarnessError::Config(format!("--{what} is required without --config"));
                let algorithm = parse_algorithm(self.algorithm.as_deref().ok_or_else(|| missing("algorithm"))?)?;
                let name = self.benchmark.as_deref().ok_or_else(|| missing("benchmark"))?;
                let benchmark =
                    Benchmark::parse(name).ok_or_else(|| HarnessError::Config(format!("unknown benchmark {name:?}")))?;
                ExperimentConfig::new(algorithm, benchmark, self.dim.ok_or_else(|| missing("dim"))?)
            }
        };
        if self.config.is_some() && (self.algorithm.is_some() || self.benchmark.is_some() || self.dim.is_some()) {
            return Err(HarnessError::Config(
                "--algorithm, --benchmark and --dim cannot be combined with --config".into(),
            ));
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if self.alpha.is_some() {
            config.alpha = self.alpha;
        }
        if self.budget.is_some() {
            config.budget = self.budget;
        }
        if self.iterations.is_some() {
            config.iterations = self.iterations;
        }
        config.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("results"));
        Ok((config, out))
    }

    fn pool(&self) -> Result<rayon::ThreadPool, HarnessError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| HarnessError::Config(format!("thread pool: {e}")))
    }
}

fn check_aborts(records: &[TrialRecord]) -> Result<(), HarnessError> {
    if !records.is_empty() && records.iter().all(|r| r.termination == TerminationReason::NumericalAbort) {
        return Err(HarnessError::AllTrialsAborted(records.len()));
    }
    Ok(())
}

fn write_trial_outputs(out: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    output::write_trials(&out.join("trials.csv"), records)?;
    output::write_summaries(&out.join("summary.csv"), &[aggregate(records)?])?;
    check_aborts(records)
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(common) => {
            let (config, out) = common.resolve()?;
            let records = common.pool()?.install(|| run_trials(&config, None))?;
            write_trial_outputs(&out, &records)?;
            let s = aggregate(&records)?;
            println!(
                "{} N={} {}: {}/{} successes, median evaluations {}",
                s.function,
                s.dim,
                s.algorithm,
                s.successes,
                s.trials,
                s.median_evals.map_or("-".into(), |m| m.to_string())
            );
        }
        Command::SweepAlpha(common) => {
            let (config, out) = common.resolve()?;
            let cells = common.pool()?.install(|| sweep::alpha_sweep(&config))?;
            output::write_sweep(&out.join("sweep.csv"), &cells)?;
            println!("{} cells written to {}", cells.len(), out.join("sweep.csv").display());
        }
        Command::MoRun(common) => {
            let (config, out) = common.resolve()?;
            let records = common.pool()?.install(|| mo_run::run_mo_trials(&config))?;
            for (k, r) in records.iter().enumerate() {
                output::write_mo_trace(&out.join(format!("mo_trace_{k}.csv")), r)?;
                output::write_mo_final(&out.join(format!("mo_final_{k}.csv")), r)?;
            }
            output::write_mo_summary(&out.join("mo_summary.csv"), &records)?;
            for (k, r) in records.iter().enumerate() {
                println!("trial {k}: final hypervolume {}", r.final_hypervolume());
            }
        }
        Command::Trace { common, every } => {
            let (config, out) = common.resolve()?;
            let every = every.or(config.trace_every).unwrap_or(1);
            if every == 0 {
                return Err(HarnessError::Config("--every must be positive".into()));
            }
            let space = config.spec()?.space;
            let records = common.pool()?.install(|| run_trials(&config, Some(every)))?;
            for (k, r) in records.iter().enumerate() {
                output::write_trace(&out.join(format!("trace_{k}.csv")), r, &space)?;
            }
            write_trial_outputs(&out, &records)?;
            println!("{} traces written to {}", records.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
