//! Scenario runner for layer-spectrum experiments.
//!
//! A scenario JSON file describes a base manifold, a cross-section, grid
//! resolutions and one experiment; `run` executes the pipeline
//! geometry -> cross-section modes -> quadratic forms -> eigensolver /
//! Weyl scan, and writes a results record, CSV tables and SVG plots with
//! a content-hash manifest. Numerical outputs are bit-reproducible:
//! fixed seeds, ordered reductions, no time-dependent values in the
//! tables.

pub mod error;
pub mod experiments;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod schema;
pub mod selftest;

pub use error::{CliError, ExitCode};
pub use report::ResultRecord;
pub use scenario::{Experiment, Scenario};

/// Run a scenario file, writing outputs under `out_dir`.
pub fn run_scenario_file(
    path: &std::path::Path,
    out_dir: &std::path::Path,
    scan_override: Option<experiments::ScanOverride>,
) -> Result<ResultRecord, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let scenario = Scenario::parse(&text)?;
    experiments::run(&scenario, out_dir, scan_override)
}
