//! `pli`: analyze, optimize, lift and simulate protograph LDPC codes.

mod commands;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "pli",
    version,
    about = "Protograph LDPC codes with local irregularity"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold search or a single EXIT trajectory.
    Analyze(AnalyzeArgs),
    /// Optimize local degree distributions with the genetic search.
    Optimize(OptimizeArgs),
    /// Lift a protograph to a parity-check matrix in alist format.
    Lift(LiftArgs),
    /// BI-AWGN Monte Carlo with sum-product decoding.
    Simulate(SimulateArgs),
    /// Merge simulation results into one long-format table.
    PlotData(PlotDataArgs),
}

#[derive(Args, Debug, serde::Serialize)]
pub struct AnalyzeArgs {
    /// Protograph JSON file.
    pub protograph: PathBuf,
    /// Run once at this Eb/N0 (dB) and write the trajectory.
    #[arg(long, conflicts_with = "threshold")]
    pub ebn0: Option<f64>,
    /// Search the threshold (default).
    #[arg(long)]
    pub threshold: bool,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 0.005)]
    pub precision: f64,
    /// Allowed bracket growth beyond --lo/--hi, in dB.
    #[arg(long, default_value_t = 10.0)]
    pub expand_limit: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub conv_tol: f64,
    /// Output JSON (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct OptimizeArgs {
    pub protograph: PathBuf,
    /// One-based edge `i,j` to optimize.
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    pub edge: Option<String>,
    /// Element-wise optimization over several edges.
    #[arg(long)]
    pub sweep: bool,
    /// Sweep order as `i,j;i,j;...` (default: every edge, row-major).
    #[arg(long, requires = "sweep")]
    pub order: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub population: usize,
    #[arg(long, default_value_t = 60)]
    pub generations: usize,
    #[arg(long, default_value_t = 2400)]
    pub max_evaluations: usize,
    /// Threshold precision inside the search, dB.
    #[arg(long, default_value_t = 0.01)]
    pub precision: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub conv_tol: f64,
    #[arg(long, default_value_t = 20)]
    pub d_max: u32,
    #[arg(long, default_value_t = 0.05)]
    pub mutation_sigma: f64,
    #[arg(long, default_value_t = 0.3)]
    pub insertion_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub max_sweeps: usize,
    /// Resume state: JSON-lines log for --sweep, checkpoint file for --edge.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Optimized protograph JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optimization records and final threshold report (default: <out>.record.json).
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct LiftArgs {
    pub protograph: PathBuf,
    /// Lifting factor.
    #[arg(long = "s", default_value_t = 1000)]
    pub lifting: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Remove all 4-cycles.
    #[arg(long)]
    pub girth6: bool,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_swaps: usize,
    /// Output alist; the sidecar goes to <out>.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct SimulateArgs {
    pub alist: PathBuf,
    /// Code rate for the Eb/N0 normalization (default: (n - m) / (n - punctured)).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Comma-separated Eb/N0 points in dB.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub ebn0_list: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 100)]
    pub min_frame_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_frames: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub llr_clamp: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    /// Sidecar JSON (default: <alist>.json).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// One-based punctured columns, e.g. `1001-2000,4001` or `none`; overrides the sidecar.
    #[arg(long)]
    pub punctured: Option<String>,
    /// Series name (default: protograph id from the sidecar, else the file stem).
    #[arg(long)]
    pub code_id: Option<String>,
    /// Results CSV; the JSON report goes next to it with extension `.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct PlotDataArgs {
    /// JSON reports written by `simulate`.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// Threshold reports written by `analyze`, matched to series by code name.
    #[arg(long)]
    pub analysis: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, schema or I/O problem: exit 2.
    Input(String),
    /// Infeasible request: exit 3.
    Infeasible(String),
    /// Internal invariant violated: exit 4.
    Audit(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn core(context: &Path, e: pli_core::Error) -> Self {
        use pli_core::Error as E;
        let msg = format!("{}: {e}", context.display());
        match e {
            E::Infeasible(_) | E::Lifting(_) => CliError::Infeasible(msg),
            _ => CliError::Input(msg),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Audit(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Audit(m) => write!(f, "audit failure: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("pli: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Lift(a) => commands::lift(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::PlotData(a) => commands::plot_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pli: {e}");
            ExitCode::from(e.code())
        }
    }
}
