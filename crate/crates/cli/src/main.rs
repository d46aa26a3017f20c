//! `finsler` — evaluate direction-dependent tensors, trace geodesics and
//! parallel transports, and run the verification suite against a metric
//! specification file.
//!
//! Exit codes: 0 success, 1 parse/schema errors, 2 inadmissible point,
//! 3 degenerate metric, 4 domain exit (exit parameter on stderr),
//! 5 verification failure. Stdout carries data only.

mod commands;
mod output;
mod specfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<finsler::Error> for CliError {
    fn from(e: finsler::Error) -> Self {
        let code = match &e {
            finsler::Error::NotAdmissible { .. } => 2,
            finsler::Error::DegenerateMetric { .. } => 3,
            finsler::Error::DomainExit { .. } => 4,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "finsler",
    version,
    about = "Direction-dependent tensors, connections and parallel transport for pseudo-Finsler metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a tensor or connection at an admissible point, JSON to stdout.
    Tensor(TensorArgs),
    /// Integrate a geodesic, CSV to stdout (or --out).
    Geodesic(GeodesicArgs),
    /// Parallel-transport an observer and reference vectors along a curve, CSV output.
    Transport(TransportArgs),
    /// Run the verification suite; exit 0 iff every check lands as expected.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TensorArgs {
    /// Metric specification file (JSON).
    spec: PathBuf,
    /// Base point coordinates.
    #[arg(long = "at", num_args = 1.., required = true, allow_negative_numbers = true)]
    at: Vec<f64>,
    /// Direction components.
    #[arg(long = "dir", num_args = 1.., required = true, allow_negative_numbers = true)]
    dir: Vec<f64>,
    /// One of: g, g-inverse, cartan, gamma, spray, N, berwald, chern, torsion, restspace.
    #[arg(long = "what")]
    what: String,
    /// Connection used by `torsion` (chern or berwald).
    #[arg(long = "connection", default_value = "chern")]
    connection: String,
}

#[derive(Args)]
struct GeodesicArgs {
    spec: PathBuf,
    /// Initial position.
    #[arg(long = "from", num_args = 1.., required = true, allow_negative_numbers = true)]
    from: Vec<f64>,
    /// Initial velocity.
    #[arg(long = "dir", num_args = 1.., required = true, allow_negative_numbers = true)]
    dir: Vec<f64>,
    /// Integrate over [0, tmax].
    #[arg(long = "tmax", default_value_t = 1.0)]
    tmax: f64,
    /// RK4 step (default: tmax/1000).
    #[arg(long = "step")]
    step: Option<f64>,
    /// chern, berwald or spray.
    #[arg(long = "connection", default_value = "chern")]
    connection: String,
    /// Write CSV here instead of stdout.
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransportArgs {
    spec: PathBuf,
    /// Curve as semicolon-separated coordinate expressions in `t`.
    #[arg(long = "curve", conflicts_with = "curve_csv")]
    curve: Option<String>,
    /// Curve as a CSV polyline (columns t, x0, x1, …; cubic interpolation).
    #[arg(long = "curve-csv")]
    curve_csv: Option<PathBuf>,
    /// Observer components at t1.
    #[arg(long = "observer", num_args = 1.., required = true, allow_negative_numbers = true)]
    observer: Vec<f64>,
    /// Reference vector(s) at t1, comma-separated components; repeatable.
    #[arg(long = "vector")]
    vector: Vec<String>,
    #[arg(long = "t1")]
    t1: Option<f64>,
    #[arg(long = "t2")]
    t2: Option<f64>,
    /// RK4 step (default: |t2 − t1|/1000).
    #[arg(long = "step")]
    step: Option<f64>,
    /// chern or berwald.
    #[arg(long = "connection", default_value = "chern")]
    connection: String,
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    spec: PathBuf,
    /// quick or full.
    #[arg(long = "suite", default_value = "full")]
    suite: String,
    /// RNG seed (default: FINSLER_SEED environment variable, then 0).
    #[arg(long = "seed")]
    seed: Option<u64>,
    /// Emit the machine-readable JSON report instead of text.
    #[arg(long = "json", default_value_t = false)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Tensor(args) => commands::tensor(args),
        Command::Geodesic(args) => commands::geodesic(args),
        Command::Transport(args) => commands::transport(args),
        Command::Verify(args) => commands::verify(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
