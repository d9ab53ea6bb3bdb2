use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scpb::harness::{run_comparison, ExperimentConfig};
use scpb::problems::{save_instance, Instance, PortfolioInstance, TwoStageQuadInstance};
use scpb::rng::{stream, SampleStream};
use scpb::Error;

#[derive(Parser)]
#[command(name = "scpb", version, about = "Benchmark runner for the single-cut stochastic bundle solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single method of a config file and write its trace.
    Run {
        config: PathBuf,
        /// Override base_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output prefix from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the trial count from the config.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run every method of a config file on the same instance.
    Compare {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Generate a problem instance file (`portfolio` or `twostage`).
    GenInstance {
        family: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
        /// Number of kinks of the portfolio scalar objective.
        #[arg(long, default_value_t = 10)]
        breakpoints: usize,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch() -> Result<ExitCode, Error> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            output,
            trials,
        } => {
            let cfg = load_config(&config, seed, output, trials)?;
            if cfg.methods.len() != 1 {
                return Err(Error::Config(
                    "`run` expects a config with exactly one method; use `compare`".into(),
                ));
            }
            execute(&cfg)
        }
        Command::Compare {
            config,
            seed,
            output,
            trials,
        } => {
            let cfg = load_config(&config, seed, output, trials)?;
            execute(&cfg)
        }
        Command::GenInstance {
            family,
            seed,
            n,
            output,
            breakpoints,
        } => {
            let mut gen = SampleStream::new(seed, stream::INSTANCE_GEN);
            let instance = match family.as_str() {
                "portfolio" => Instance::Portfolio(PortfolioInstance::generate(n, breakpoints, &mut gen)),
                "twostage" => Instance::TwoStage(TwoStageQuadInstance::generate(n, &mut gen)?),
                other => {
                    return Err(Error::Config(format!(
                        "unknown family `{other}` (expected portfolio or twostage)"
                    )))
                }
            };
            save_instance(&output, &instance)?;
            println!("wrote {} instance to {}", instance.family(), output.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(
    path: &Path,
    seed: Option<u64>,
    output: Option<PathBuf>,
    trials: Option<usize>,
) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    if let Some(output) = output {
        cfg.output = output;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<ExitCode, Error> {
    let report = run_comparison(cfg)?;
    println!("trace:   {}", report.trace_path.display());
    println!("summary: {}", report.summary_path.display());
    println!(
        "{:<16} {:>5} {:>8} {:>8} {:>12} {:>22} {:>12}  status",
        "method", "trial", "outer", "inner", "wall_ms", "obj_mean", "half_ci"
    );
    for s in &report.summaries {
        println!(
            "{:<16} {:>5} {:>8} {:>8} {:>12.3} {:>22.10e} {:>12.3e}  {}",
            s.label,
            s.trial,
            s.outer_iters,
            s.inner_iters,
            s.wall_ms,
            s.obj_mean,
            s.obj_half_ci,
            if s.aborted { "aborted" } else { "ok" },
        );
    }
    if report.any_aborted {
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
