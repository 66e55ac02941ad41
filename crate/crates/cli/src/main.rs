use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use riskeq::{load_config, run_experiment, Grid, Mode};

#[derive(Debug, Parser)]
#[command(name = "riskeq", version, about = "Equilibria of a two-stage market with risk-averse agents")]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    mode: Mode,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `out_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solver tolerance, overriding the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid `a,b,c,d,nx,ny` over `[a,b] x [c,d]`, overriding the config.
    #[arg(long = "seed-grid")]
    seed_grid: Option<String>,
}

fn run(args: Args) -> riskeq::Result<String> {
    let mut cfg = load_config(&args.config)?;
    if let Some(tol) = args.tol {
        cfg.set_tol(tol)?;
    }
    if let Some(g) = &args.seed_grid {
        cfg.set_grid(Grid::parse(g)?);
    }
    let out = args
        .out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = run_experiment(&cfg, args.mode, &out)?;
    Ok(report.summary)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("riskeq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
