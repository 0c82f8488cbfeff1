//! `homecare`: solve, tune, simulate and bound home-care scheduling policies.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "homecare", version, about = "Approximate linear programming for home-care routing and scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Instance document (JSON).
    #[arg(long)]
    pub instance: PathBuf,
    /// Master seed; every random stream derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlpArgs {
    /// ALP formulation: full, 2i, 1d or 1d-2i.
    #[arg(long, default_value = "1d-2i")]
    pub variant: String,
    /// State-relevance constant ε (default: mean arrival rate).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Use stored parameters instead of solving.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    /// Random initial states.
    #[arg(long, default_value_t = 25)]
    pub states: usize,
    /// Warm-up days per initial state.
    #[arg(long, default_value_t = 20)]
    pub warmup: usize,
    /// Evaluation days per run.
    #[arg(long, default_value_t = 365)]
    pub days: usize,
    /// Independent randomness per policy instead of common random numbers.
    #[arg(long)]
    pub no_crn: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SbArgs {
    /// Scenarios per SB decision.
    #[arg(long, default_value_t = 100)]
    pub scenarios: usize,
    /// Accepting scenarios needed by SB.
    #[arg(long, default_value_t = 50)]
    pub threshold: usize,
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Check an instance document and print its summary.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve the ALP by column generation and write params.json.
    SolveAlp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        alp: AlpArgs,
    },
    /// Closed-form parameters of the special case with their certificate.
    ClosedForm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Search ε by simulation.
    TuneEps {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1d-2i")]
        variant: String,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Pick the SB acceptance threshold by simulation.
    TuneSb {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sb: SbArgs,
        /// Comma-separated thresholds.
        #[arg(long, default_value = "10,20,30,40,50,60,70,80,90")]
        candidates: String,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate policies; gaps are against the first.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "myopic")]
        policies: String,
        #[command(flatten)]
        alp: AlpArgs,
        #[command(flatten)]
        sb: SbArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Compare policies against a reference with paired tests.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alp,myopic,sb")]
        policies: String,
        #[arg(long = "ref", default_value = "myopic")]
        reference: String,
        #[command(flatten)]
        alp: AlpArgs,
        #[command(flatten)]
        sb: SbArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Perfect-information lower bound and the gap of one policy.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alp")]
        policies: String,
        #[command(flatten)]
        alp: AlpArgs,
        #[command(flatten)]
        sb: SbArgs,
        #[arg(long, default_value_t = 5)]
        states: usize,
        #[arg(long, default_value_t = 20)]
        warmup: usize,
        #[arg(long, default_value_t = 100)]
        paths: usize,
        #[arg(long, default_value_t = homecare_alp::bounds::DEFAULT_LAYER_CAP)]
        layer_cap: usize,
    },
    /// Label every (type, region) as always-accept, maybe or always-reject.
    Classify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        alp: AlpArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let f = output::Failure::from_anyhow(&e);
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
