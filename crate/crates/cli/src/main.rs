use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracsys_cli::{load_config, run, Command};

/// Fractional Hamiltonian systems: admissibility gate, block spectra,
/// saddle solves, diagnostics and sweeps.
#[derive(Debug, Parser)]
#[command(name = "fracsys", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let Some(out) = args.out.clone().or_else(|| cfg.output_dir.clone()) else {
        eprintln!("error: no output directory (pass --out or set output.dir)");
        return ExitCode::from(1);
    };
    match run(args.command, &cfg, &out, args.seed) {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            if outcome.status.exit_code() != 0 {
                eprintln!("warning: did not converge; partial artifacts written");
            }
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
