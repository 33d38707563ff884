//! Scenario files, the preset library and the sweep runner.

pub mod pipeline;
pub mod presets;
pub mod scenario;

pub use pipeline::{export_wavefunctions, run, RunManifest, MANIFEST_NAME};
pub use scenario::{load_scenario, parse_scenario, ScenarioError, ScenarioSpec};
