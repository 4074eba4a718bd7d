//! `cascade`: simulate, analyse and report three-photon GHZ experiments.
//!
//! Every command writes into its own output directory together with the
//! effective `config.toml` and a `manifest.toml`. Exit codes: 0 success,
//! 2 configuration or usage error, 3 data error, 4 reconstruction did not
//! converge.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cascade::Error;

#[derive(Debug, Parser)]
#[command(
    name = "cascade",
    version,
    about = "Simulate and analyse three-photon GHZ experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML configuration; keys left out take the experiment's values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory. Defaults to a fresh directory under `runs/`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Write into a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// Use the experiment's real durations and rates instead of desk scaling.
    #[arg(long, global = true)]
    pub paper_exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InequalityName {
    Mermin,
    Svetlichny,
    Chsh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Plus,
    Minus,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate time-tag streams, one file per setting.
    Simulate {
        /// `tomography`, `mermin`, `svetlichny`, `herald`, or Pauli strings
        /// such as `xxx,xyy`.
        #[arg(long, default_value = "tomography")]
        settings: String,
        /// Split each setting over the detector-output relabelings.
        #[arg(long)]
        balance: bool,
    },
    /// Time-difference histograms and peak-to-background ratio.
    Histogram {
        /// A stream file; simulated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Seconds of the simulated run.
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
    },
    /// E(σx,σx,σx) against the source phase with a sinusoid fit.
    PhaseScan {
        /// Evenly spaced phases over one period.
        #[arg(long, default_value_t = 12)]
        points: usize,
        /// Explicit phases in radians; overrides `--points`.
        #[arg(long, value_delimiter = ',')]
        phases: Vec<f64>,
        /// Exact correlations of the noisy state instead of simulated counts.
        #[arg(long)]
        exact: bool,
    },
    /// Maximum-likelihood state reconstruction.
    Tomo {
        /// `simulate` output or count-table dataset; simulated when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Bootstrap resamples; defaults to `run.bootstrap_resamples`.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Mermin, Svetlichny or CHSH test.
    Inequality {
        name: InequalityName,
        #[arg(long)]
        input: Option<PathBuf>,
        /// CHSH setting family.
        #[arg(long, value_enum, default_value = "plus")]
        variant: Variant,
    },
    /// Heralded Bell states: tomography per herald outcome, CHSH, heralding
    /// efficiency and the herald-angle sweep.
    Herald {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Photon used as the herald.
        #[arg(long, default_value_t = 1)]
        mode: usize,
        /// Herald polarizer angles for the sweep, radians.
        #[arg(long, value_delimiter = ',', default_values_t = [std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_8, 0.0])]
        betas: Vec<f64>,
    },
    /// Visibility against fiber length mismatch.
    Dispersion {
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Existing mismatch in meters; reports the best added length from the grid.
        #[arg(long, allow_hyphen_values = true)]
        mismatch: Option<f64>,
    },
    /// All pipelines with the tables and figures' data.
    Report,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::NonConvergence { .. } => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
