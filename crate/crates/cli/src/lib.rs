//! Command-line front end for `brwcrit`: argument parsing, dispatch and
//! output assembly. `run` returns the process exit code.

mod commands;
mod output;
mod reproduce;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "BRWCRIT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "brwcrit",
    version,
    about = "Critical values, extinction and survival of branching random walks on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Root sequences and estimates of M_s, M_w and M_w^- (CSV)
    Params(ParamsArgs),
    /// Extinction or survival probabilities on a window (CSV)
    FixedPoint(FixedPointArgs),
    /// lambda_s, the lambda_w bracket and the class structure (JSON)
    Critical(CriticalArgs),
    /// Check a survival certificate (JSON)
    Certificate(CertificateArgs),
    /// Monte Carlo survival estimates (JSON, optional per-replica CSV)
    Simulate(SimulateArgs),
    /// List or materialize the built-in examples
    Example(ExampleArgs),
    /// Re-run the checks for one of the worked examples
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Serialize)]
struct ParamsArgs {
    /// Kernel file (JSON)
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    site: usize,
    /// Target of the return sequence for M_s; defaults to the site itself
    #[arg(long)]
    target: Option<usize>,
    /// Longest path length; 64 for finite kernels, 128 for generated ones
    #[arg(long)]
    nmax: Option<usize>,
    /// Window size; the whole site set for finite kernels, 512 for generated ones
    #[arg(long)]
    window: Option<usize>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FixedPointMode {
    /// Extinction probabilities, iterated up from 0
    Q,
    /// Survival probabilities, iterated down from 1
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Auto,
    Picard,
    Newton,
}

#[derive(Debug, Args, Serialize)]
struct FixedPointArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum)]
    mode: FixedPointMode,
    /// Site whose verdict decides the exit code
    #[arg(long, default_value_t = 0)]
    site: usize,
    /// Newton is used by default on windows of at most 256 sites
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    /// Ignore the kernel's tail certificate and truncate with never-born offspring
    #[arg(long)]
    no_tail: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CriticalArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    site: usize,
    #[arg(long)]
    window: Option<usize>,
    /// Bisection tolerance for lambda_s and the bracket
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    nmax: Option<usize>,
    /// Grid points for the bracket search
    #[arg(long, default_value_t = 17)]
    grid: usize,
    #[arg(long)]
    no_tail: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    /// lambda K v >= v / (1 - v)
    Nonlinear,
    /// lambda^n K^n v >= v
    Linear,
    /// n-fold iterate of H at least v
    Iterated,
}

#[derive(Debug, Args, Serialize)]
struct CertificateArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Nonlinear)]
    kind: KindArg,
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Site where the certificate must be positive
    #[arg(long, default_value_t = 0)]
    site: usize,
    /// JSON array with the certificate values, one per site
    #[arg(long, required_unless_present = "tail", conflicts_with = "tail")]
    vector: Option<PathBuf>,
    /// Use the kernel's built-in tail certificate
    #[arg(long)]
    tail: bool,
    /// Sites taken from the tail certificate
    #[arg(long, requires = "tail")]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    site: usize,
    #[arg(long)]
    replicas: usize,
    /// Master seed; there is no default
    #[arg(long)]
    seed: u64,
    /// Continuous time, run up to the horizon
    #[arg(long, conflicts_with_all = ["generations", "gens"])]
    continuous: bool,
    /// Discrete generations (the default)
    #[arg(long, conflicts_with = "horizon")]
    generations: bool,
    /// Time horizon in continuous mode
    #[arg(long, requires = "continuous")]
    horizon: Option<f64>,
    /// Generation cap in generation mode
    #[arg(long, conflicts_with = "horizon")]
    gens: Option<u64>,
    /// Population cap; larger runs stop and count as surviving
    #[arg(long, default_value_t = brwcrit_core::sim::DEFAULT_P_MAX)]
    pmax: u64,
    /// Births at the start site that mark a replica as locally surviving
    #[arg(long, default_value_t = brwcrit_core::sim::DEFAULT_LOCAL_THRESHOLD)]
    local_threshold: u64,
    /// Aggregate JSON; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replica CSV
    #[arg(long)]
    replicas_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ExampleArgs {
    /// List the registered examples
    #[arg(long, conflicts_with_all = ["name", "param", "emit"])]
    list: bool,
    #[arg(long, required_unless_present = "list")]
    name: Option<String>,
    /// Parameter as key=value; repeatable
    #[arg(long = "param", value_name = "K=V")]
    param: Vec<String>,
    /// Kernel file to write; stdout when absent
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Sites listed for offspring-law examples
    #[arg(long, default_value_t = 8)]
    rows: usize,
}

#[derive(Debug, Args, Serialize)]
struct ReproduceArgs {
    /// Worked example to re-run: 1, 2 or 4
    #[arg(long)]
    paper_example: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Invalid input of any kind; maps to exit code 1.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for Invalid {
            fn from(e: $t) -> Self {
                Invalid(e.to_string())
            }
        })*
    };
}

invalid_from!(brwcrit_core::Error, serde_json::Error, csv::Error, std::io::Error, String);

impl From<&str> for Invalid {
    fn from(e: &str) -> Self {
        Invalid(e.to_string())
    }
}

type Res<T> = Result<T, Invalid>;

fn configure_threads() -> Res<()> {
    let Some(raw) = std::env::var_os(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Invalid(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    // a second call in the same process finds the pool already built; that is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INVALID;
    }
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
