use clap::Parser;
use imrecon::scenario::{self, Command, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Reconstruct radiation fields from Im(psi) on a line, and related experiments.
#[derive(Debug, Parser)]
#[command(name = "imrecon", version)]
struct Cli {
    /// synth, extract, karp, propagate, counterexample, scatter, gkl or pipeline
    command: Command,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: the scenario's `out`, else out/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Expansion order, overriding the scenario.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("IMRECON_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("IMRECON_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION),
            };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let sc = match Scenario::load(&cli.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.scenario.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let dir = scenario::output_dir(&sc, cli.out.as_deref());
    let start = Instant::now();
    match scenario::run(&sc, cli.command, cli.order) {
        Ok(a) => {
            if let Err(e) = scenario::write_artifacts(&dir, &a) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_NUMERICAL);
            }
            if !cli.quiet {
                for (k, v) in &a.report.metrics {
                    println!("{k} = {v:e}");
                }
                eprintln!("{} {} done in {:.2?}, wrote {}", sc.name, cli.command, start.elapsed(), dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) if e.is_validation() => {
            eprintln!("error: {}: {e}", cli.scenario.display());
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(w) = scenario::write_failure(&dir, &sc, cli.command, &e) {
                eprintln!("error: {w}");
            }
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
