//! Config-driven experiments on top of `riskeq-core`.

pub mod config;
pub mod error;
pub mod field;
pub mod report;
pub mod runner;
pub mod sweep;

pub use config::{load_config, parse, serialize, ExperimentConfig, Grid, Mode, SweepMethod};
pub use error::{CliError, Result};
pub use field::{vector_field, write_field, FieldRow, FIELD_HEADER};
pub use runner::{run_experiment, RunReport, RESULTS_FILE, SUMMARY_FILE};
pub use sweep::{multistart_sweep, Cluster, Method, SweepCensus, SweepSettings, CLUSTER_RADIUS};

/// Vector field for the grid in `cfg`, written to `path` as CSV.
pub fn export_vector_field(cfg: &ExperimentConfig, path: &std::path::Path) -> Result<Vec<FieldRow>> {
    let grid = cfg
        .grid
        .ok_or_else(|| CliError::Config {
            field: "grid_box".into(),
            reason: "a grid is required for this mode".into(),
        })?;
    let rows = vector_field(&cfg.instance, &cfg.risk_set, &grid.nodes())?;
    let file = std::fs::File::create(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    write_field(&rows, std::io::BufWriter::new(file)).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(rows)
}
