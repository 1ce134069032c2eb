//! `covertkey` command-line tool.

mod args;
mod commands;
mod error;
mod manifest;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use covertkey_core::sim::exact::{budget, BUDGET_ENV};

use args::{Cli, Command};
use commands::Outputs;
use error::{CliError, CliResult};
use manifest::{digest_file, Manifest};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Replay(r) => replay(&r.manifest, &cli.out),
        mut cmd => {
            if let Command::Simulate(s) = &mut cmd {
                if s.seed.is_none() {
                    let seed = rand::random::<u64>();
                    eprintln!("seed: {seed}");
                    s.seed = Some(seed);
                }
            }
            execute(cmd, &cli.out).map(|_| ())
        }
    }
}

fn seed_of(cmd: &Command) -> Option<u64> {
    match cmd {
        Command::Simulate(s) => s.seed,
        _ => None,
    }
}

/// Run a resolved command and write its manifest.
fn execute(cmd: Command, out_dir: &Path) -> CliResult<Manifest> {
    let mut out = Outputs::new(out_dir)?;
    let channel = commands::run(&cmd, &mut out)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: seed_of(&cmd),
        config: cmd,
        budget: budget(),
        channel,
        outputs: out.digests()?,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

fn replay(path: &Path, out_dir: &Path) -> CliResult<()> {
    let recorded = Manifest::load(path)?;
    if let Some(ch) = &recorded.channel {
        let now = digest_file(Path::new(&ch.path), ch.path.clone())
            .map_err(|e| CliError::Usage(format!("cannot read channel {}: {e}", ch.path)))?;
        if now.sha256 != ch.sha256 {
            return Err(CliError::Validation(format!(
                "channel {} changed since the recorded run",
                ch.path
            )));
        }
    }
    std::env::set_var(BUDGET_ENV, recorded.budget.to_string());
    let fresh = execute(recorded.config.clone(), out_dir)?;
    let differing: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|f| !fresh.outputs.contains(f))
        .map(|f| f.path.as_str())
        .chain(
            fresh
                .outputs
                .iter()
                .filter(|f| !recorded.outputs.contains(f))
                .map(|f| f.path.as_str()),
        )
        .collect();
    if !differing.is_empty() {
        return Err(CliError::ReplayMismatch(differing.join(", ")));
    }
    println!("replay matches: {} files identical", fresh.outputs.len());
    Ok(())
}
