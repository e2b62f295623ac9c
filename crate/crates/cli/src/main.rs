//! `berrymag`: geometric- and dynamic-phase magnetometry from the command line.

mod commands;
mod config;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{Config, KEYS};

#[derive(Parser, Debug)]
#[command(name = "berrymag", version, about = "Berry-phase and Ramsey NV magnetometry simulator")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// P(B) over the field grid as CSV.
    Signal(Overrides),
    /// Figures of merit over a parameter grid as JSON lines.
    Sweep(Overrides),
    /// Field estimate from a measured signal and slope.
    Estimate(Overrides),
    /// Coherence decay, regime table and spectral overlay.
    Decohere(Overrides),
    /// Lorentzian noise parameters reproducing T2* and T2.
    Calibrate(Overrides),
    /// List configuration keys with defaults.
    Keys,
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// Any configuration key as `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn resolve(cli: &Cli, overrides: &[String]) -> Result<Config, String> {
    // `--config` may also appear among the trailing overrides.
    let mut file = cli.config.clone();
    let mut rest = Vec::with_capacity(overrides.len());
    let mut it = overrides.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            file = Some(it.next().ok_or("--config: missing value")?.into());
        } else if let Some(p) = a.strip_prefix("--config=") {
            file = Some(p.into());
        } else {
            rest.push(a.clone());
        }
    }
    let mut c = Config::defaults();
    if let Some(path) = &file {
        c.load_file(path)?;
    }
    c.apply_overrides(&rest)?;
    if let Some(s) = cli.seed {
        c.set("seed", &s.to_string());
    }
    if let Some(w) = cli.workers {
        c.set("workers", &w.to_string());
    }
    if let Some(o) = &cli.out {
        c.set("out", &o.display().to_string());
    }
    Ok(c)
}

fn write(c: &Config, outcome: &Outcome) -> Result<(), String> {
    match c.raw("out") {
        Some(out) => {
            for f in &outcome.files {
                let path = format!("{out}{}", f.suffix);
                std::fs::write(&path, &f.body).map_err(|e| format!("{path}: {e}"))?;
            }
        }
        None => {
            for f in &outcome.files {
                print!("{}", f.body);
            }
        }
    }
    Ok(())
}

type Handler = fn(&Config) -> Result<Outcome, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, overrides): (Handler, &[String]) = match &cli.command {
        Command::Signal(o) => (commands::signal, &o.overrides),
        Command::Sweep(o) => (commands::sweep, &o.overrides),
        Command::Estimate(o) => (commands::estimate, &o.overrides),
        Command::Decohere(o) => (commands::decohere, &o.overrides),
        Command::Calibrate(o) => (commands::calibrate, &o.overrides),
        Command::Keys => {
            for (k, d, help) in KEYS {
                println!("{k:<18} {:<28} {help}", d.unwrap_or("-"));
            }
            return ExitCode::SUCCESS;
        }
    };
    let config = match resolve(&cli, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("berrymag: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            if let Err(e) = write(&config, &outcome) {
                eprintln!("berrymag: {e}");
                return ExitCode::from(3);
            }
            if let Some(m) = &outcome.message {
                eprintln!("berrymag: {m}");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(f) => {
            match &f {
                Failure::Config(m) | Failure::Compute(m) => eprintln!("berrymag: {m}"),
            }
            ExitCode::from(f.code() as u8)
        }
    }
}
