//! Library behind the `arcodo` binary: file formats, run configuration, the
//! pipeline, and report emission. Kept as a library so integration tests can
//! drive everything the CLI does.

pub mod config;
pub mod files;
pub mod pipeline;
pub mod report;

pub use config::{RunConfig, SimConfig};
pub use pipeline::{run_pipeline, PipelineRun};
