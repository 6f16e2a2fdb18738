//! Configs, run artifacts, resume, replay, analysis and ablation sweeps.
//!
//! An artifact directory holds:
//!
//! | file | content |
//! |------|---------|
//! | `manifest.json` | schema version, config hash, progress |
//! | `config.toml` | canonical config snapshot |
//! | `events.jsonl` | every elicitation, decision and ledger snapshot |
//! | `generations.jsonl` | one [`GenerationRecord`](crate::evolution::GenerationRecord) per line |
//! | `llm_log.jsonl` | every gateway attempt (llm backend only) |
//! | `usage.json` | token and cost ledger (llm backend only) |
//! | `metrics/*.csv` | per-generation statistics and the donation matrix |
//!
//! JSONL files start with a `{"kind":"header","schema_version":1}` line and
//! CSV files with a `# schema_version: 1` comment line.

mod ablate;
mod analyze;
mod artifact;
mod config;
mod replay;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolution::EvolutionError;
use crate::gateway::GatewayError;
use crate::metrics::MetricsError;

pub use ablate::{ablate, ablation_configs, canonical_key, AblationSpec};
pub use analyze::{analyze, AnalyzeOptions, AnalyzeReport};
pub use artifact::{
    load_artifact, resume_artifact, run_to_artifact, write_metrics, Artifact, Manifest, RunOptions,
    RunSummary,
};
pub use config::{config_hash, config_snapshot, ConfigFile};
pub use replay::{replay, Divergence, ReplayReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("`schema_version` {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("config hash mismatch: artifact was created with {expected}, got {found}")]
    ConfigMismatch { expected: String, found: String },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
    #[error("{0} already holds an artifact; use `resume` to continue it")]
    AlreadyExists(PathBuf),
    #[error("incompatible artifacts: {0} (pass --force to analyze anyway)")]
    Incompatible(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PersistError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
