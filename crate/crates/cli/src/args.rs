use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kashin::ortho::TransformKind;
use kashin::quantize::CodebookMode;

/// Kashin decomposition, codebook quantization and convergence diagnostics
#[derive(Parser, Debug)]
#[command(name = "kashin", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decompose a matrix into U + Q₁VQ₂ᵀ and write a .kqd container
    Decompose(DecomposeArgs),
    /// Decompose and quantize one or more matrices into .kqtz artifacts
    Quantize(QuantizeArgs),
    /// Reconstruct a dense matrix from a .kqtz artifact
    Dequantize(DequantizeArgs),
    /// Compare a matrix with its quantized artifact
    Stats(StatsArgs),
    /// Eigenvector min-max estimates per operator family
    Estimate(EstimateArgs),
    /// Convergence and matrix-versus-vector benchmarks (CSV)
    Bench(BenchArgs),
    /// Write a seeded standard-normal or constant matrix as KDEN
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Transform {
    Qr,
    Dct,
    Butterfly,
    Householder,
}

impl From<Transform> for TransformKind {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Qr => TransformKind::RandomDense,
            Transform::Dct => TransformKind::Dct,
            Transform::Butterfly => TransformKind::Butterfly,
            Transform::Householder => TransformKind::Householder,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    PerFactor,
    Joint2d,
}

impl From<Mode> for CodebookMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PerFactor => CodebookMode::PerFactor,
            Mode::Joint2d => CodebookMode::Joint2D,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F64,
    F32,
}

#[derive(Args, Debug, Clone)]
pub struct OutputFormat {
    /// Layout of the report written to stdout
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct DecompFlags {
    /// Transform for both sides
    #[arg(long, value_enum, default_value_t = Transform::Dct)]
    pub transform: Transform,
    /// Transform acting on columns (Q₁); overrides --transform
    #[arg(long, value_enum)]
    pub left_transform: Option<Transform>,
    /// Transform acting on rows (Q₂); overrides --transform
    #[arg(long, value_enum)]
    pub right_transform: Option<Transform>,
    /// Relative residual at which iteration stops
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Iteration budget
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Seed for the random transforms (Q₂ uses seed + 1)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Input matrix (.kden or .npy)
    pub input: PathBuf,
    /// Output decomposition container
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub decomp: DecompFlags,
    #[command(flatten)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    /// Input matrices (.kden, .npy) or decompositions (.kqd)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file for one input, or directory for several
    #[arg(short, long)]
    pub output: PathBuf,
    /// Bits per code
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub bits: u8,
    #[arg(long, value_enum, default_value_t = Mode::PerFactor)]
    pub mode: Mode,
    /// Fit one codebook over all inputs instead of one per tensor
    #[arg(long)]
    pub shared_codebook: bool,
    /// Worker threads for independent tensors (0 = all cores)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub decomp: DecompFlags,
    #[command(flatten)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct DequantizeArgs {
    /// Quantized artifact
    pub input: PathBuf,
    /// Output matrix (.kden)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Storage precision of the output
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub dtype: Precision,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Reference matrix (.kden or .npy)
    pub original: PathBuf,
    /// Quantized artifact
    pub artifact: PathBuf,
    /// Skip the direct uniform and k-means baselines
    #[arg(long)]
    pub no_baselines: bool,
    /// Seed for the k-means baseline
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Evaluate all four families in the Table 1 layout
    #[arg(long, conflicts_with = "transform")]
    pub table1: bool,
    /// Single family to evaluate
    #[arg(long, value_enum)]
    pub transform: Option<Transform>,
    /// Dimension (butterfly rounds up to a power of two)
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Operators per random family
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Residual curves of the vector algorithm per family
    #[arg(long, conflicts_with = "matrix_vs_vector", required_unless_present = "matrix_vs_vector")]
    pub convergence: bool,
    /// Matrix algorithm against the dense Kronecker vector algorithm
    #[arg(long)]
    pub matrix_vs_vector: bool,
    /// Vector sizes for --convergence
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub sizes: Vec<usize>,
    /// Families for --convergence
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Transform::Qr, Transform::Dct, Transform::Butterfly, Transform::Householder])]
    pub families: Vec<Transform>,
    /// Rows for --matrix-vs-vector
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    /// Columns for --matrix-vs-vector
    #[arg(long, default_value_t = 32)]
    pub cols: usize,
    /// Family for --matrix-vs-vector
    #[arg(long, value_enum, default_value_t = Transform::Qr)]
    pub transform: Transform,
    #[arg(long, default_value_t = 23)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest vectorized dimension the dense Kronecker path may build
    #[arg(long, default_value_t = 4096)]
    pub cap: usize,
    /// Write CSV here instead of stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fill with this value instead of standard-normal draws
    #[arg(long, allow_hyphen_values = true)]
    pub constant: Option<f64>,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub dtype: Precision,
    #[arg(short, long)]
    pub output: PathBuf,
}
