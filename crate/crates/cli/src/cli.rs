use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Reproduce one quantum measurement with repeated uses of another.
///
/// Measurements are JSON files or built-ins: `trine`, `noisy-z:p,q`, `vn:d`,
/// `degenerate-qutrit`.
#[derive(Debug, Clone, Parser)]
#[command(name = "measrepro", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo samples or trials (command specific default when omitted).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Convergence tolerance for iterative solvers.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Largest number of uses or copies swept.
    #[arg(long, global = true)]
    pub max_n: Option<usize>,
    /// Print the raw report as JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write the result rows as CSV.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchMode {
    /// Exhaustive when at most 12 outcome strings, hill climbing otherwise.
    Auto,
    Exhaustive,
    Hill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CloneMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeChoice {
    Identity,
    Repetition,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelSource {
    /// Measurement whose associated classical channel is used.
    #[arg(required_unless_present = "bsc", conflicts_with = "bsc")]
    pub measurement: Option<String>,
    /// Binary symmetric channel with this flip probability instead.
    #[arg(long)]
    pub bsc: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Check that a measurement is a valid POVM or instrument.
    Validate { measurement: String },
    /// Find a partition protocol, solve the error minimization and build the input states.
    Synth {
        measurement: String,
        /// Uses of the available measurement.
        #[arg(long, default_value_t = 2)]
        uses: usize,
        #[arg(long, value_enum, default_value_t = SearchMode::Auto)]
        search: SearchMode,
        /// Random restarts for hill climbing.
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Outcomes of the von Neumann target; above 2 the map is fixed and only the QP is solved.
        #[arg(long, default_value_t = 2)]
        target: usize,
    },
    /// Haar-averaged RMS error of one POVM against another.
    Rms {
        implemented: String,
        /// Defaults to the von Neumann measurement of matching dimension.
        target: Option<String>,
    },
    /// Run the post-measurement sub-routine on random states and compare with the instrument.
    Postmeas {
        measurement: String,
        #[arg(long, default_value_t = 20)]
        states: usize,
    },
    /// Select a cloning basis and tabulate the maximum-likelihood error curve.
    Clone {
        measurement: String,
        #[arg(long, value_enum, default_value_t = CloneMode::Exact)]
        mode: CloneMode,
    },
    /// Capacity of the associated classical channel.
    Capacity {
        #[command(flatten)]
        source: ChannelSource,
    },
    /// Block-coding protocol over the associated channel.
    Block {
        #[command(flatten)]
        source: ChannelSource,
        /// Target measurements (message symbols) per block.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Block length for random codes.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, value_enum, default_value_t = CodeChoice::Repetition)]
        code: CodeChoice,
        /// Copies per symbol for the repetition code.
        #[arg(long, default_value_t = 3)]
        copies: usize,
    },
    /// Write a measurement (built-in or file) as JSON.
    Export { measurement: String, path: PathBuf },
    /// Recompute the published constants and report PASS/FAIL for each.
    ReproducePaper {
        /// `trine=FILE` replaces the trine measurement used by every row.
        #[arg(long = "override", value_name = "NAME=FILE")]
        overrides: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate { .. } => "validate",
            Self::Synth { .. } => "synth",
            Self::Rms { .. } => "rms",
            Self::Postmeas { .. } => "postmeas",
            Self::Clone { .. } => "clone",
            Self::Capacity { .. } => "capacity",
            Self::Block { .. } => "block",
            Self::Export { .. } => "export",
            Self::ReproducePaper { .. } => "reproduce-paper",
        }
    }
}
