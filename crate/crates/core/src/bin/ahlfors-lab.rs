use std::path::PathBuf;
use std::process::ExitCode;

use ahlfors_lab::cli::{main_with, Command, Overrides, EXIT_CONFIG};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ahlfors-lab", version, about = "Covering-surface experiments on explicit holomorphic maps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate a(r), l(r) and l/a.
    Profile(Flags),
    /// Islands over the three target disks.
    Islands(Flags),
    /// Preimage of the figure-eight and its complement.
    Graph(Flags),
    /// Preimages of the perturbed chart segment.
    Arcs(Flags),
    /// Run every enabled verifier; exit 1 if one fails.
    VerifyAll(Flags),
}

#[derive(Args)]
struct Flags {
    /// Map expression in z, e.g. "exp(z)".
    #[arg(long)]
    map: Option<String>,
    /// Single radius, replacing the configured schedule.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid cells across the disk diameter.
    #[arg(long)]
    resolution: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (command, f) = match cli.command {
        Cmd::Profile(f) => (Command::Profile, f),
        Cmd::Islands(f) => (Command::Islands, f),
        Cmd::Graph(f) => (Command::Graph, f),
        Cmd::Arcs(f) => (Command::Arcs, f),
        Cmd::VerifyAll(f) => (Command::VerifyAll, f),
    };
    let overrides = Overrides {
        config: f.config,
        map: f.map,
        r: f.r,
        out: f.out,
        seed: f.seed,
        resolution: f.resolution,
    };
    ExitCode::from(main_with(command, &overrides) as u8)
}
