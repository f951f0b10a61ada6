use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use winnowgale_cli::{execute, Command, RunManifest, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION};

/// Compiles online learners into s-gales and checks the results.
#[derive(Parser)]
#[command(name = "winnowgale", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run manifest.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; overrides `output_dir` in the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let manifest = match RunManifest::load(&cli.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("usage error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let out = cli
        .out
        .or_else(|| manifest.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out/{}-{}", cli.command.name(), manifest.seed)));
    match execute(cli.command, &manifest, &out) {
        Ok(outcome) => {
            for (name, ok) in &outcome.checks {
                println!("{:<5} {name}", if *ok { "ok" } else { "FAIL" });
            }
            println!("outputs in {}", out.display());
            ExitCode::from(if outcome.ok { EXIT_OK } else { EXIT_VIOLATION } as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
