//! Pipeline orchestration behind the `hlsm` binary: preprocess, split,
//! train and eval subcommands over persisted artifacts. Every output file
//! embeds the full configuration and the input's content hash so stages
//! can be mixed, restarted and audited.

pub mod commands;
pub mod config;

pub use commands::{cmd_eval, cmd_preprocess, cmd_split, cmd_train, EvalMode};
pub use config::PipelineConfig;
