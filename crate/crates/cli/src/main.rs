use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sagnac_cli::commands::execute;
use sagnac_cli::config::{Command, Entries, RunConfig};
use sagnac_cli::error::CliError;
use sagnac_cli::output::render;

#[derive(Parser)]
#[command(name = "sagnac", version, about = "Spin-motion Sagnac interferometer simulations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// One run from the spin superposition and motional vacuum.
    Simulate,
    /// P↓ against the rotation rate.
    ScanOmega,
    /// P↓ against the segment duration τ.
    ScanTime,
    /// Sensitivity table over the number of units.
    Sensitivity,
    /// Candidate rotation rates for a measured population.
    Disambiguate,
    /// Step-by-step comparison of the analytic engine with the Fock oracle.
    CompareOracle,
    /// Lab-frame propagation against the rotating-wave Hamiltonian.
    ValidateRwa,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::ScanOmega => Command::ScanOmega,
            Cmd::ScanTime => Command::ScanTime,
            Cmd::Sensitivity => Command::Sensitivity,
            Cmd::Disambiguate => Command::Disambiguate,
            Cmd::CompareOracle => Command::CompareOracle,
            Cmd::ValidateRwa => Command::ValidateRwa,
        }
    }
}

/// Flags override the config file; `--set` reaches every key.
#[derive(Args)]
struct Overrides {
    /// Flat `key = value` file, or a table written by this tool.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["phasespace", "fock"])]
    engine: Option<String>,
    /// pmdd, ideal, baseline or an element list such as "fwd, pi_a, rev".
    #[arg(long, global = true)]
    sequence: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    reps: Option<String>,
    #[arg(long = "cutoff-a", global = true)]
    cutoff_a: Option<String>,
    #[arg(long = "cutoff-b", global = true)]
    cutoff_b: Option<String>,
    #[arg(long, global = true)]
    points: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    min: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    max: Option<String>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Any config key, e.g. `--set target=0.3`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn entries(&self) -> Result<Entries, CliError> {
        let mut e = match &self.config {
            Some(path) => Entries::load(path)?,
            None => Entries::default(),
        };
        let flags = [
            ("engine", &self.engine),
            ("sequence", &self.sequence),
            ("omega", &self.omega),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("tau", &self.tau),
            ("reps", &self.reps),
            ("cutoff_a", &self.cutoff_a),
            ("cutoff_b", &self.cutoff_b),
            ("points", &self.points),
            ("min", &self.min),
            ("max", &self.max),
            ("format", &self.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                e.push(k, v);
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            e.push(k, v);
        }
        Ok(e)
    }
}

fn main_inner(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.command.into(), &cli.overrides.entries()?)?;
    let outcome = execute(&cfg)?;
    let bytes = render(&outcome.table, &cfg)?;
    match &cli.overrides.out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::config(format!("cannot write stdout: {e}")))?,
    }
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
