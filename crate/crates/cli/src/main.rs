use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lifespan_cli::{load, run_command, Command};

/// Life-span bounds laboratory for u_t = Δu + |u|^{p-1}u.
///
/// Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numerical failure.
#[derive(Parser)]
#[command(name = "lifespan", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Superlevel-set densities; writes density.csv.
    Density,
    /// Every life-span bound; writes density.csv and bounds.csv.
    Bounds,
    /// Blow-up simulation; writes blowup.csv and history.csv.
    Simulate,
    /// Everything plus pass/fail checks; writes verify.csv.
    Verify,
    /// Heat kernel identities; writes kernel_check.csv.
    KernelCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let cfg = match load(path, cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cmd = match cli.command {
        Cmd::Density => Command::Density,
        Cmd::Bounds => Command::Bounds,
        Cmd::Simulate => Command::Simulate,
        Cmd::Verify => Command::Verify,
        Cmd::KernelCheck => Command::KernelCheck,
    };
    match run_command(cmd, &cfg, cli.out.as_deref()) {
        Ok(summary) => {
            if !cli.quiet {
                for line in &summary.lines {
                    println!("{line}");
                }
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
            }
            for f in &summary.failing {
                eprintln!("FAIL {f}");
            }
            if summary.passed == Some(false) { ExitCode::from(1) } else { ExitCode::SUCCESS }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
