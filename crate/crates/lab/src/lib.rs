//! Scenario runner for shadowing experiments on attracting basins.
//!
//! A [`Scenario`] names a map, a shadow target and probe ladders; [`run`]
//! evaluates it into a [`Report`] with a verdict, and [`report::emit`]
//! writes the report, probe table, plots and rasters to a directory.

pub mod compare;
pub mod error;
pub mod report;
pub mod run;
pub mod scenario;
pub mod svg;
pub mod verdict;

pub use compare::{compare_reports, DriftSummary, DRIFT_LIMIT};
pub use error::LabError;
pub use report::{emit, Report, Verdict};
pub use run::{run, RunOptions, RunOutput};
pub use scenario::{preset, Regime, Scenario, PRESET_NAMES};

/// Loads a scenario from a TOML file, or a preset by name.
pub fn load_scenario(spec: &str) -> Result<Scenario, LabError> {
    let path = std::path::Path::new(spec);
    if path.is_file() {
        return Scenario::from_toml(&std::fs::read_to_string(path)?);
    }
    preset(spec).ok_or_else(|| {
        LabError::Validation(format!("`{spec}` is neither a scenario file nor a preset ({})", PRESET_NAMES.join(", ")))
    })
}
