//! `nvcap` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nvcap::Error;

/// Exit status for each failure class.
pub mod exit {
    pub const PARSE: u8 = 2;
    pub const VALIDATION: u8 = 3;
    pub const SOLVER: u8 = 4;
    pub const FIT: u8 = 5;
    pub const MONTE_CARLO: u8 = 6;
    pub const DATA: u8 = 7;
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => exit::PARSE,
        Error::Validation(_) => exit::VALIDATION,
        Error::Model(_) | Error::Solver(_) => exit::SOLVER,
        Error::Fit(_) => exit::FIT,
        Error::MonteCarlo(_) => exit::MONTE_CARLO,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) => exit::DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "nvcap", version, about = "Ferroelectric nvCap compact model")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Parameter and experiment configuration; built-in nominal values when absent.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "NVCAP_OUT", default_value = "nvcap-out")]
    pub out: PathBuf,
    /// Overrides the Monte Carlo seed of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum McKind {
    /// Drawn parameter values only.
    Params,
    /// C–V loop capacitances.
    Cv,
    /// Memory window at the window read biases.
    Window,
    /// Gradual erase staircase.
    Erase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Up,
    Down,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate the configuration, then write it in canonical form.
    Validate,
    /// TAT leakage of both layers over a bias range.
    LeakageSweep {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        v_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        v_max: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Small-signal capacitance of both written states over a bias range.
    CvSweep {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        v_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        v_max: f64,
        #[arg(long, default_value_t = 0.1)]
        v_step: f64,
    },
    /// Quasi-static C–V hysteresis loop.
    SimulateCv,
    /// PUND sequence: P–V loop and full trace.
    SimulatePund,
    /// Switched fraction against pulse amplitude and width.
    SimulateKinetics {
        #[arg(long, value_enum, default_value_t = Target::Down)]
        target: Target,
    },
    /// Gradual erase staircase from the programmed state.
    SimulateErase,
    /// Window and leakage along a defect trajectory.
    SimulateEndurance {
        /// Defect table (`cycles`, `n_tr_fe`, optional `n_tr_int`) replacing the power law.
        #[arg(long)]
        defects: Option<PathBuf>,
    },
    /// Device-to-device variability.
    Montecarlo {
        #[arg(long, value_enum, default_value_t = McKind::Cv)]
        experiment: McKind,
        /// Sample count; the configuration value when absent.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Bit-line read of both states, with optional yield or degradation runs.
    Readout {
        /// Replaces the `[read]` section with another configuration file's.
        #[arg(long)]
        circuit: Option<PathBuf>,
        /// Monte Carlo read yield over this many devices.
        #[arg(long)]
        r#yield: Option<usize>,
        /// Defect axis to sweep: `fe`, `fe+int` or `int-up`.
        #[arg(long)]
        degradation: Option<String>,
        /// Densities for the degradation sweep, in the axis unit.
        #[arg(long, value_delimiter = ',')]
        densities: Option<Vec<f64>>,
    },
    /// Staged parameter extraction from measurement CSVs.
    Calibrate {
        /// Directory of dataset CSVs.
        #[arg(long)]
        data: PathBuf,
        /// Plan name; only `standard` is built in.
        #[arg(long, default_value = "standard")]
        plan: String,
        /// Only run stages whose name starts with one of these prefixes.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<String>>,
        /// Number of passes over the stages.
        #[arg(long)]
        passes: Option<usize>,
        /// Write synthetic datasets from the configured parameters into
        /// `--data` (with this relative noise) instead of fitting.
        #[arg(long)]
        synthesize: Option<f64>,
    },
    /// Repeat a run from its manifest alone.
    Replay { manifest: PathBuf },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli, args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
