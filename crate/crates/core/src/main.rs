use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hyperlink_volume::commands::{load_scene, run, write_outputs, Command, Flags};
use hyperlink_volume::Result;

/// Volume eigenvalues and hyperlinking numbers of framed hyperlink scenes.
#[derive(Debug, Parser)]
#[command(name = "hlvol", version)]
struct Cli {
    /// Scene file (TOML).
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum)]
    command: Command,
    /// Drop kappa values above this from the scene's schedule.
    #[arg(long)]
    kappa_max: Option<f64>,
    /// Projection plane, overriding the scene.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    plane: Option<u8>,
    /// Perturb spatial vertex coordinates by at most 1e-7 with this seed.
    #[arg(long)]
    jitter: Option<u64>,
    /// Directory for result.json, scene.toml, diagram.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write convergence tables as CSV (into --out, or the current directory).
    #[arg(long)]
    csv: bool,
}

fn execute(cli: &Cli) -> Result<String> {
    let scene = load_scene(&cli.scene, cli.jitter)?;
    let flags = Flags {
        kappa_max: cli.kappa_max,
        plane: cli.plane.map(usize::from),
        jitter: cli.jitter,
        csv: cli.csv,
    };
    let outcome = run(cli.command, &scene, &flags)?;
    if cli.out.is_some() || cli.csv {
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        write_outputs(&outcome, &dir, cli.csv)?;
    }
    outcome.record.to_json()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": { "category": e.category(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
