//! `doubling` — experiments on Schrödinger operators whose potentials ride
//! orbits of θ ↦ mθ mod 1.
//!
//! Subcommands: `lyapunov` (Monte-Carlo exponent curve), `bands` (Floquet
//! bands of a periodic θ), `spectrum` (box eigenvalues), `localize`
//! (decay/participation reports), `verify` (structural identity suite),
//! `float-demo` (precision collapse of naive float iteration).
//!
//! Configuration comes from flags or a JSON file (`--config`), flags
//! winning. Exit codes: 0 success, 1 validation failure, 2 numerical
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use doubling_cli::config::{
    resolve, CommandKind, FileConfig, GridSpec, OutputFormat, Overrides, SamplingFunctionSpec,
    ThetaSpec,
};
use doubling_cli::{commands, CliError};

#[derive(Parser)]
#[command(
    name = "doubling",
    version,
    about = "Lyapunov exponents and spectra for circle-map potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo Lyapunov-exponent curve over an energy grid
    Lyapunov(CommonArgs),
    /// Floquet bands of a periodic digit stream
    Bands(CommonArgs),
    /// Eigenvalues of a finite half-line box
    Spectrum(CommonArgs),
    /// Eigenfunction decay and participation reports over θ batches
    Localize(CommonArgs),
    /// Run the structural identity suite
    Verify(CommonArgs),
    /// Contrast float iteration of the map with the symbolic shift
    FloatDemo(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling constant λ > 0
    #[arg(long)]
    lambda: Option<f64>,
    /// Sampling function: cosine | step:c | table:path | const:v
    #[arg(long)]
    f: Option<String>,
    /// Digit base m ≥ 2
    #[arg(long)]
    base: Option<u32>,
    /// Master seed for Bernoulli sampling
    #[arg(long)]
    seed: Option<u64>,
    /// Transfer-matrix steps per sample
    #[arg(long)]
    n: Option<u64>,
    /// Monte-Carlo samples (and θ batch size for localize)
    #[arg(long)]
    samples: Option<u32>,
    /// Energy grid lo:hi:count
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Box size (sites) for spectrum/localize
    #[arg(long = "N")]
    box_size: Option<usize>,
    /// Boundary condition angle α ∈ [0, π) \ {π/2}
    #[arg(long)]
    alpha: Option<f64>,
    /// θ as a digit stream: seed:<u64> | rational:p/q | digits:[prefix;]cycle
    #[arg(long)]
    theta: Option<String>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (0 = hardware parallelism)
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_overrides(args: &CommonArgs) -> Result<Overrides, CliError> {
    let f = args
        .f
        .as_deref()
        .map(SamplingFunctionSpec::parse_flag)
        .transpose()
        .map_err(CliError::Validation)?;
    let theta = args
        .theta
        .as_deref()
        .map(ThetaSpec::parse_flag)
        .transpose()
        .map_err(CliError::Validation)?;
    let grid = args
        .grid
        .as_deref()
        .map(GridSpec::parse_flag)
        .transpose()
        .map_err(CliError::Validation)?;
    let format = match args.format.as_deref() {
        None => None,
        Some("csv") => Some(OutputFormat::Csv),
        Some("json") => Some(OutputFormat::Json),
        Some(other) => {
            return Err(CliError::Validation(format!(
                "unknown format {other:?}; expected csv or json"
            )))
        }
    };
    Ok(Overrides {
        lambda: args.lambda,
        f,
        base: args.base,
        theta,
        grid,
        n_steps: args.n,
        n_samples: args.samples,
        box_size: args.box_size,
        alpha: args.alpha,
        seed: args.seed,
        threads: args.threads,
        out: args.out.clone(),
        format,
    })
}

fn execute(kind: CommandKind, args: &CommonArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = parse_overrides(args)?;
    let config = resolve(kind, file, flags)?;

    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }

    commands::run(&config)
}

fn main() -> ExitCode {
    // Usage problems are validation failures (exit 1); help/version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, args) = match &cli.command {
        Command::Lyapunov(a) => (CommandKind::Lyapunov, a),
        Command::Bands(a) => (CommandKind::Bands, a),
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
        Command::Localize(a) => (CommandKind::Localize, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::FloatDemo(a) => (CommandKind::FloatDemo, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
