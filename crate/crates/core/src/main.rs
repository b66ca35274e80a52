use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use integrable::cli;

/// Verification toolkit for Maslov indices, commuting first integrals and
/// 7-manifold parameter arithmetic. The run is described by a JSON spec; see
/// the README for the command list and parameter schemas.
#[derive(Parser)]
#[command(name = "integrable", version, about)]
struct Args {
    /// Path of the JSON run spec, or '-' for standard input.
    #[arg(long)]
    spec: String,

    /// Override the spec's random seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Report rendering.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut spec = match cli::load_spec_from(&args.spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let report = match cli::execute(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let rendered = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => cli::to_csv(&report),
    };
    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, rendered) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(rendered.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(if report.pass { 0 } else { 1 })
}
