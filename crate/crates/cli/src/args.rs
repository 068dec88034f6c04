use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "birkhoff",
    version,
    about = "Birkhoff factorization of loops on the unit circle"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Loop-spec file; repeat for batch runs. Reports come out in input order.
    #[arg(long = "input", short = 'i', global = true)]
    pub inputs: Vec<PathBuf>,

    /// Residual tolerance for reconstruction and verification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,

    /// Maximum number of exponents kept by band-growing operations.
    #[arg(long, global = true, default_value_t = 512)]
    pub band_cap: usize,

    /// Minimum number of circle samples for checks and traces.
    #[arg(long, global = true, default_value_t = 256)]
    pub samples: usize,

    /// Truncation order of the BCH series.
    #[arg(long, global = true, default_value_t = 6)]
    pub order: usize,

    /// Radius of the BCH ball.
    #[arg(long, global = true, default_value_t = 0.125)]
    pub radius: f64,

    /// Search range for partial indices; defaults to the largest |exponent| of the input.
    #[arg(long, global = true)]
    pub bound: Option<i64>,

    /// Write per-sample residuals `sample_index,theta,residual` (factor, verify).
    /// With several inputs the i-th trace goes to `<stem>.<i>.<ext>`.
    #[arg(long, global = true)]
    pub trace_csv: Option<PathBuf>,

    /// Number of inputs processed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Include wall-clock timings in reports (makes output nondeterministic).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Factor g = plus · D · minus.
    Factor {
        #[arg(long, value_enum, default_value_t = Mode::Matrix)]
        mode: Mode,
    },
    /// Winding number of a scalar loop, or of det g for a matrix loop.
    Winding,
    /// Partial indices of a matrix loop.
    Indices {
        /// Try candidate tuples in a seeded random order instead of most-balanced first.
        #[arg(long)]
        shuffle: Option<u64>,
    },
    /// Split a loop into its nonnegative and negative exponent parts.
    Project,
    /// Wiener, weighted Wiener, sup and annulus norms.
    Norms {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0])]
        weights: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 8])]
        annuli: Vec<u32>,
    },
    /// Check a factorization from a `factor` report against its loop.
    Verify {
        #[arg(long)]
        factors: PathBuf,
    },
    /// Self-check of the BCH machinery: exp oracle, Lipschitz bounds, split solver.
    BchCheck {
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Scalar,
    Matrix,
    Group,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Factor { .. } => "factor",
            Command::Winding => "winding",
            Command::Indices { .. } => "indices",
            Command::Project => "project",
            Command::Norms { .. } => "norms",
            Command::Verify { .. } => "verify",
            Command::BchCheck { .. } => "bch-check",
        }
    }
}
