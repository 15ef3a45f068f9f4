//! `enp`: verification suites and spectral experiments for the elastic
//! Neumann–Poincaré operator.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::CliError;
use config::{ConfigError, RawConfig, RunConfig};
use output::OutputDir;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "enp", version, about = "Elastic Neumann-Poincare operator: checks, spectra and compactness probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated resolutions, e.g. 16,24,32.
    #[arg(long, global = true)]
    resolutions: Option<String>,
    /// sphere, ellipsoid or star.
    #[arg(long, global = true)]
    surface: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<String>,
    /// Any other configuration key, as KEY=VALUE (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Command {
    /// Kernel split, (anti)symmetry, finite-difference and weak-singularity checks.
    VerifyKernels,
    /// Flat Riesz identities, half-space T³ = T, symbol formula, sum of squares and composition order.
    VerifyRiesz,
    /// Symbol formula, sum-of-squares samples, R³ − R order, trace probe and direct quadrature.
    VerifySymbols,
    /// Assemble K and S per resolution, compute spectra, clusters and compactness probes.
    Spectrum,
    /// Singular-value trends of the polynomial composites of K.
    ProbeCompactness,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyKernels => "verify-kernels",
            Command::VerifyRiesz => "verify-riesz",
            Command::VerifySymbols => "verify-symbols",
            Command::Spectrum => "spectrum",
            Command::ProbeCompactness => "probe-compactness",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        raw.parse_into(&text)?;
    }
    let flags = [
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("seed", cli.seed.map(|s| s.to_string())),
        ("resolutions", cli.resolutions.clone()),
        ("surface", cli.surface.clone()),
        ("lambda", cli.lambda.clone()),
        ("mu", cli.mu.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, &v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::general(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        raw.set(k, v)?;
    }
    RunConfig::from_raw(raw)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = load(cli)?;
    if cli.command == Command::Spectrum {
        cfg.require_probe_resolutions()?;
    }
    if cli.command == Command::ProbeCompactness && cfg.resolutions.len() < 3 {
        return Err(ConfigError::general(format!("config key 'resolutions': probe-compactness needs at least 3 resolutions, got {}", cfg.resolutions.len())).into());
    }
    let mut out = OutputDir::open(&cfg.out, cli.command.name(), cfg.raw.entries())?;
    let result = match cli.command {
        Command::VerifyKernels => commands::verify_kernels(&cfg, &mut out),
        Command::VerifyRiesz => commands::verify_riesz(&cfg, &mut out),
        Command::VerifySymbols => commands::verify_symbols(&cfg, &mut out),
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::ProbeCompactness => commands::probe_compactness(&cfg, &mut out),
    };
    eprintln!("{}: {}", cfg.out.display(), out.written().join(", "));
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("enp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
