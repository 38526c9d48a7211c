use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schur_purify::cloning::OutputCount;

#[derive(Debug, Parser)]
#[command(name = "schur-purify", version, about = "Purification and cloning of identically prepared mixed qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate d_j, p_j and f_j with the yield and mean fidelity.
    Stats(StatsArgs),
    /// Check the block decomposition against dense matrices.
    Verify(VerifyArgs),
    /// Monte Carlo run of the protocol.
    Simulate(SimulateArgs),
    /// Estimation Bloch length against N for several λ.
    Figure1(Figure1Args),
    /// Optimal N → M cloning fidelity.
    Clone(CloneArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
}

impl Format {
    pub fn delimiter(self) -> u8 {
        match self {
            Self::Csv => b',',
            Self::Tsv => b'\t',
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// Leave the j = 0 term out of the mean fidelity.
    #[arg(long)]
    pub without_j0: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seeds the input direction (unless given) and the random rotations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bloch direction as x,y,z.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub direction: Option<Vec<f64>>,
    /// Number of random rotations for the covariance checks.
    #[arg(long, default_value_t = 5)]
    pub rotations: usize,
    /// Export the nonzero amplitudes of the basis |j,m,α> to this file.
    #[arg(long)]
    pub dump_basis: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Measure explicit density matrices instead of sampling the closed form.
    #[arg(long)]
    pub dense: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-trial records as `trial,j,alpha,kept,fidelity`.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct Figure1Args {
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 40)]
    pub n_max: usize,
    /// Render the curves as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct CloneArgs {
    #[arg(long)]
    pub n: usize,
    /// Output count, or `inf`.
    #[arg(long)]
    pub m: OutputArg,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputArg(pub OutputCount);

impl FromStr for OutputArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self(OutputCount::Infinite)),
            other => other
                .parse::<u64>()
                .map(|m| Self(OutputCount::Finite(m)))
                .map_err(|_| format!("expected a positive integer or `inf`, got `{s}`")),
        }
    }
}
