//! Command-line interface: `brownscope {lifetime|domain|map|spectest|oracle|radii}`.

mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use commands::{domain_boundary, sigma_boundary};
pub use config::{Model, Overrides, RunConfig};

use crate::error::{Error, Result};
use crate::region::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "brownscope", version, about = "Spectral domains of free-probability models and their random-matrix checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lifetime T over the configured grid.
    Lifetime(CommonArgs),
    /// Boundary of the spectral domain (mapped by the push-forward when gamma != 0).
    Domain(CommonArgs),
    /// Push-forward map at the given points.
    Map(CommonArgs),
    /// One-sided spectral test at the given points.
    Spectest(CommonArgs),
    /// Random-matrix comparison against the computed domain.
    Oracle(CommonArgs),
    /// Annulus radii and the inner-radius curve over t.
    Radii(CommonArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// add-circ, add-elliptic, mult-unitary, mult-positive or rdiag.
    #[arg(long)]
    model: Option<String>,
    /// Measure JSON file (overrides the config's measure).
    #[arg(long)]
    measure: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_im: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or pgm.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix size for the oracle.
    #[arg(long)]
    n: Option<usize>,
    /// Number of product factors for the oracle.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Real part of a single evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    re: Option<f64>,
    /// Imaginary part of a single evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    im: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            model: self.model.as_deref().map(str::parse).transpose()?,
            measure: self.measure.clone(),
            t: self.t,
            gamma_re: self.gamma_re,
            gamma_im: self.gamma_im,
            out: self.out.clone(),
            format: self.format.as_deref().map(str::parse::<Format>).transpose()?,
            seed: self.seed,
            n: self.n,
            k: self.k,
            trials: self.trials,
            re: self.re,
            im: self.im,
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, command): (&CommonArgs, fn(&RunConfig) -> Result<Vec<u8>>) = match &cli.command {
        Command::Lifetime(a) => (a, commands::lifetime),
        Command::Domain(a) => (a, commands::domain),
        Command::Map(a) => (a, commands::map),
        Command::Spectest(a) => (a, commands::spectest),
        Command::Oracle(a) => (a, commands::oracle),
        Command::Radii(a) => (a, commands::radii),
    };
    let cfg = RunConfig::load(args.config.as_deref(), &args.overrides()?)?;
    let bytes = command(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Exit code of an error: 2 for bad input, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

/// Run the command line in `args` and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let code = exit_code(&e);
            let doc = json!({"error": {"kind": e.kind(), "message": e.to_string(), "exit_code": code}});
            eprintln!("{doc}");
            code
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}
