//! `acaslab` command-line front end: fit, sample, optimize, simulate,
//! evaluate and slice.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use acaslab::airspace::Advisory;
use acaslab::optimizer::SliceLabels;
use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "acaslab", version, about = "Vertical collision avoidance logic toolkit")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for stochastic commands; overrides `evaluation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides `paths.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Labels {
    Sense,
    Advisory,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the CPTs of the configured model structure to data; writes model.json.
    Fit {
        /// CSV of initial-network samples, one column per node.
        #[arg(long)]
        initial: PathBuf,
        /// CSV of transition-network samples.
        #[arg(long)]
        transitions: Option<PathBuf>,
        /// Laplace prior count.
        #[arg(long, default_value_t = 1.0)]
        prior: f64,
    },
    /// Sample encounters; writes one nominal-trajectory CSV per encounter.
    Sample {
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Solve the MDP and write the logic table.
    Optimize,
    /// Simulate one encounter in closed loop; writes trace.csv.
    Simulate {
        /// Encounter index within the seed's stream family.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Estimate safety metrics; writes metrics.json.
    Evaluate,
    /// Export a policy slice over (tau, h); writes slice.csv.
    Slice {
        /// Ownship vertical rate, ft/s; must be a grid cut point.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        hdot0: f64,
        /// Intruder vertical rate, ft/s; must be a grid cut point.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        hdot1: f64,
        #[arg(long, default_value = "COC")]
        a_prev: String,
        #[arg(long, value_enum, default_value_t = Labels::Sense)]
        labels: Labels,
    },
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.evaluation.seed = Some(seed);
    }
    if let Some(out) = cli.out {
        cfg.paths.out = out;
    }
    cfg.validate()?;
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::input("E_ARGS", "--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::runtime("E_THREADS", e.to_string()))?;
    }
    let out = match cli.command {
        Command::Fit { initial, transitions, prior } => {
            if !(prior >= 0.0 && prior.is_finite()) {
                return Err(CliError::input("E_ARGS", "--prior must be a non-negative number"));
            }
            commands::fit(&cfg, &initial, transitions.as_deref(), prior)?
        }
        Command::Sample { count } => commands::sample(&cfg, count)?,
        Command::Optimize => commands::optimize(&cfg)?,
        Command::Simulate { index } => commands::simulate(&cfg, index)?,
        Command::Evaluate => commands::evaluate(&cfg)?,
        Command::Slice { hdot0, hdot1, a_prev, labels } => {
            let a_prev: Advisory =
                a_prev.parse().map_err(|e: acaslab::Error| CliError::input("E_ARGS", e.to_string()))?;
            let labels = match labels {
                Labels::Sense => SliceLabels::Sense,
                Labels::Advisory => SliceLabels::Advisory,
            };
            commands::slice(&cfg, hdot0, hdot1, a_prev, labels)?
        }
    };
    commands::write_effective_config(&cfg)?;
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code as u8)
        }
    }
}
