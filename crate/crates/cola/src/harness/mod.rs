//! Reproducibility surface: synthetic task generators, experiment configs,
//! seed sweeps, persistence, and the pieces behind the `cola` binary.

pub mod config;
pub mod experiment;
pub mod report;
pub mod selftest;
pub mod snapshot;
pub mod task;

pub use config::{load_experiment_config, load_fw_config, ExperimentConfig, FwDemoConfig, Method};
pub use experiment::{run_experiment, ExperimentOutput, ResultRow, SummaryRow};
pub use report::{emit_results, OutputFormat};
pub use task::{
    generate_task, CompletionTask, GeneratedTask, MetricKind, SupervisedTask, TaskKind, TaskSpec,
};

use crate::cola::ColaError;
use crate::frankwolfe::FwError;
use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("failed to read config {path}: {source}")]
    ConfigRead {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: String, message: String },
    #[error("target delta rank {rank} is infeasible for these dimensions (max {max})")]
    InfeasibleRank { rank: usize, max: usize },
    #[error("mask needs {requested} entries but the matrix has only {cells} cells")]
    MaskTooLarge { requested: usize, cells: usize },
    #[error("task kind {task:?} cannot be trained with method {method}; use the fw-demo path for matrix completion")]
    UnsupportedCombination {
        task: task::TaskKind,
        method: String,
    },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Cola(#[from] ColaError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fw(#[from] FwError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
