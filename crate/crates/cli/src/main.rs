//! `kawlab` command-line driver.
//!
//! Exit codes: 0 success or passed verification, 2 failed verification, 1 any error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use commands::{Command, Context};
use config::ExperimentConfig;
use output::{OutputDir, Provenance};

#[derive(Debug, Parser)]
#[command(name = "kawlab", version, about = "Equilibrium Kawasaki, Glauber and diffusion dynamics of continuum particle systems")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory; overrides KAWLAB_OUT and `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Read snapshots from this file instead of sampling.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Do not echo the effective configuration.
    #[arg(short, long)]
    quiet: bool,
}

fn run(cli: &Cli) -> Result<bool, Box<dyn std::error::Error>> {
    let raw = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let needs = cli.command.needs(raw.invariance.dynamics);
    raw.validate(needs)?;
    let resolved = raw.resolve(needs)?;
    let name = clap::ValueEnum::to_possible_value(&cli.command)
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    let prov = Provenance::new(&name, &raw);
    println!("{}", prov.header());
    if !cli.quiet {
        for line in raw.to_toml().lines() {
            println!("#   {line}");
        }
    }
    let out = OutputDir::prepare(&raw, cli.out.as_deref())?;
    out.write_preamble(&prov, &raw)?;
    let ctx = Context {
        cfg: &resolved,
        out: &out,
        prov: &prov,
        snapshots: cli.snapshots.as_deref(),
    };
    commands::run(cli.command, &ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => {
                    eprintln!("\n{}", Cli::command().render_usage());
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
