//! Library surface of the pipeline CLI, so integration tests can drive the
//! commands in-process.

pub mod commands;
pub mod config;
pub mod plot;
pub mod run_manifest;

pub use commands::{cmd_compare, cmd_features, cmd_generate, cmd_pfi, cmd_search, cmd_train};
pub use config::{EffectConfig, PipelineConfig};
