//! `resopt`: command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 bad input data, 4 runtime failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "resopt", version, about = "Multiobjective hydropower reservoir scheduling")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset directory; overrides the one in the config.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Base seed; overrides the config's `seed` and `train.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a dataset, check every invariant and print a summary.
    Validate { dataset: PathBuf },
    /// Estimate normalization bounds and write them to a file.
    Bounds {
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<BoundsArg>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train the policy of one weight vector.
    Train {
        /// Weights `a,b,c` for power, AAPFD and water revenue.
        #[arg(long)]
        weights: String,
        /// Bounds file; estimated by sampling when omitted.
        #[arg(long)]
        bounds: Option<PathBuf>,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train every subproblem of the weight grid and write the front.
    Sweep {
        #[arg(long)]
        bounds: Option<PathBuf>,
        /// Train only this many evenly spaced weight vectors.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run an evolutionary baseline and write its front.
    Moea {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Bounds file (MOEA/D only); estimated by sampling when omitted.
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Merge front files, drop dominated rows and compare methods.
    Pareto {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        /// Method whose front is compared against every other method.
        #[arg(long, default_value = "drl")]
        reference: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Greedy-decode a checkpoint into a schedule and its objectives.
    Evaluate {
        checkpoint: PathBuf,
        /// Schedule CSV to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Objectives CSV; defaults to `<out stem>.objectives.csv`.
        #[arg(long)]
        objectives: Option<PathBuf>,
        /// Also write the per-decision trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write plot-ready CSVs for reward curves and fronts.
    ExportPlots {
        /// Curve CSVs written by `train` or `sweep`.
        #[arg(long, num_args = 0..)]
        curves: Vec<PathBuf>,
        /// Front CSVs.
        #[arg(long, num_args = 0..)]
        fronts: Vec<PathBuf>,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundsArg {
    Sample,
    Train,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Nsga3,
    Moead,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Data(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Data(_) => 3,
            Self::Runtime(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Self::Data(e) | Self::Runtime(e) => e,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
