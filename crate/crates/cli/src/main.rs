use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tunnellab_cli::config::parse_list;
use tunnellab_cli::output::write_all;
use tunnellab_cli::{run, CliError, Command, Options, RunConfig};

/// Double-barrier tunneling laboratory.
#[derive(Debug, Parser)]
#[command(name = "tunnellab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the `out` key).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Figure id for `figures`; all figures when omitted.
    #[arg(long, global = true)]
    figure: Option<usize>,

    /// Comma-separated separations for `verdict`.
    #[arg(long = "d-list", value_name = "D1,D2,...", global = true)]
    d_list: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Stationary coefficients over the energy grid.
    Coeffs,
    /// Multiple-reflection partial sums against the closed forms.
    Series,
    /// Applicability audit of the spectral amplitudes.
    Audit,
    /// Stationary-phase peak schedules.
    Schedule,
    /// Station densities over time.
    Propagate,
    /// Detected peaks against the schedules.
    Peaks,
    /// End-to-end verdict on the separation dependence.
    Verdict,
    /// Curve data for figures 1 to 6.
    Figures,
    /// The oscillating-spectrum counterexample.
    Counterexample,
}

impl From<&Cmd> for Command {
    fn from(c: &Cmd) -> Self {
        match c {
            Cmd::Coeffs => Command::Coeffs,
            Cmd::Series => Command::Series,
            Cmd::Audit => Command::Audit,
            Cmd::Schedule => Command::Schedule,
            Cmd::Propagate => Command::Propagate,
            Cmd::Peaks => Command::Peaks,
            Cmd::Verdict => Command::Verdict,
            Cmd::Figures => Command::Figures,
            Cmd::Counterexample => Command::Counterexample,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TUNNELLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "TUNNELLAB_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let mut config = base.with_overrides(&cli.overrides)?;
    if let Some(out) = cli.out {
        config.out = out;
    }
    let options = Options {
        figure: cli.figure,
        d_list: cli
            .d_list
            .as_deref()
            .map(|s| parse_list("d-list", s))
            .transpose()?,
    };
    let outcome = run(Command::from(&cli.command), &config, &options)?;
    write_all(&config.out, &outcome.artifacts)?;
    print!("{}", outcome.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
