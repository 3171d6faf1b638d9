//! Batch front-end for the aeroarm pipeline: scenario files, stage
//! execution with on-disk artifacts, and run-to-run comparison.

pub mod compare;
pub mod pipeline;
pub mod scenario;

pub use compare::{compare_runs, ColumnComparison, Comparison};
pub use pipeline::{run_stages, CompMeta, PipelineError, Report, RunConfig, Stage};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError, ScenarioFile};
