//! Command-line front end for ground-state decay checks.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(name = "gsdecay", version, about = "Ground-state decay envelopes and kernel checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides GSDECAY_OUT_DIR and the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state and write it as CSV.
    Solve(Common),
    /// Verify the decay envelopes of the ground state.
    Envelope(Common),
    /// Run the heat-kernel, exit-time, resolvent and Dirichlet checks.
    KernelChecks(Common),
    /// Run everything and write a summary.
    Report(Common),
}

fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("GSDECAY_OUT_DIR").filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("gsdecay-out"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, which) = match &cli.command {
        Command::Solve(c) => (c, "solve"),
        Command::Envelope(c) => (c, "envelope"),
        Command::KernelChecks(c) => (c, "kernel-checks"),
        Command::Report(c) => (c, "report"),
    };
    let loaded = config::load(&common.config, common.seed)?;
    let dir = output_dir(common.out.as_deref(), loaded.config.output_dir.as_deref());
    let mut out = OutputDir::create(&dir, &loaded.potential_id(), &loaded.hash)?;

    let outcome = match which {
        "solve" => commands::solve(&loaded, &mut out)?.1,
        "envelope" => commands::envelope(&loaded, &mut out)?.1,
        "kernel-checks" => {
            let o = commands::kernel_checks(&loaded, &mut out)?;
            let lines: Vec<(String, String)> = o
                .checks
                .iter()
                .map(|(n, p)| (format!("check.{n}"), if *p { "pass" } else { "fail" }.to_string()))
                .chain(o.lines.iter().map(|l| ("info".to_string(), l.clone())))
                .collect();
            out.text("kernel-report.txt", &lines)?;
            o
        }
        _ => {
            let mut all = Outcome::default();
            if loaded.config.checks.envelopes {
                all.merge(commands::envelope(&loaded, &mut out)?.1);
            } else {
                all.merge(commands::solve(&loaded, &mut out)?.1);
            }
            all.merge(commands::kernel_checks(&loaded, &mut out)?);
            let mut lines: Vec<(String, String)> = all
                .checks
                .iter()
                .map(|(n, p)| (format!("check.{n}"), if *p { "pass" } else { "fail" }.to_string()))
                .collect();
            lines.push(("pass".into(), all.failures().is_empty().to_string()));
            out.text("summary.txt", &lines)?;
            all
        }
    };

    if !common.quiet {
        println!("gsdecay {which}: {} (config {})", loaded.potential_id(), loaded.hash);
        for l in &outcome.lines {
            println!("  {l}");
        }
        for (n, p) in &outcome.checks {
            println!("  [{}] {n}", if *p { "PASS" } else { "FAIL" });
        }
        for f in out.written() {
            println!("  wrote {}", f.display());
        }
    }
    let failures = outcome.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsdecay: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
