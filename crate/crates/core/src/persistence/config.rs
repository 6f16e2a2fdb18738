use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PersistError, SCHEMA_VERSION};
use crate::evolution::{BackendKind, ExperimentConfig, ScriptedConfig};
use crate::game::GameConfig;
use crate::gateway::ProviderConfig;

/// The on-disk config: flat protocol keys plus `[provider]` and `[scripted]`
/// tables. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub population_size: usize,
    pub rounds: u32,
    pub generations: u32,
    pub endowment: f64,
    pub donation_multiplier: f64,
    pub trace_depth: u32,
    pub punishment_enabled: bool,
    pub punishment_multiplier: f64,
    pub backend: BackendKind,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub scripted: ScriptedConfig,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self::from_experiment(&ExperimentConfig::default(), None)
    }
}

impl ConfigFile {
    pub fn from_experiment(cfg: &ExperimentConfig, output_dir: Option<PathBuf>) -> Self {
        let g = &cfg.game;
        Self {
            schema_version: None,
            population_size: g.population_size,
            rounds: g.rounds,
            generations: cfg.generations,
            endowment: g.endowment,
            donation_multiplier: g.donation_multiplier,
            trace_depth: g.trace_depth,
            punishment_enabled: g.punishment_enabled,
            punishment_multiplier: g.punishment_multiplier,
            backend: cfg.backend,
            seed: cfg.seed,
            output_dir,
            provider: cfg.provider.clone(),
            scripted: cfg.scripted.clone(),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            game: GameConfig {
                population_size: self.population_size,
                rounds: self.rounds,
                endowment: self.endowment,
                donation_multiplier: self.donation_multiplier,
                trace_depth: self.trace_depth,
                punishment_enabled: self.punishment_enabled,
                punishment_multiplier: self.punishment_multiplier,
            },
            generations: self.generations,
            seed: self.seed,
            backend: self.backend,
            provider: self.provider.clone(),
            scripted: self.scripted.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, PersistError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| PersistError::Config(e.to_string().trim_end().to_string()))?;
        if let Some(v) = file.schema_version {
            if v != SCHEMA_VERSION {
                return Err(PersistError::SchemaMismatch {
                    found: v,
                    expected: SCHEMA_VERSION,
                });
            }
        }
        file.experiment()
            .validate()
            .map_err(|e| PersistError::Config(e.to_string()))?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
        Self::parse(&text)
    }
}

/// The canonical snapshot stored in an artifact: every key spelled out,
/// `schema_version` included, `output_dir` left out.
pub fn config_snapshot(cfg: &ExperimentConfig) -> String {
    let mut file = ConfigFile::from_experiment(cfg, None);
    file.schema_version = Some(SCHEMA_VERSION);
    toml::to_string(&file).expect("config serializes")
}

pub fn config_hash(snapshot: &str) -> String {
    hex::encode(Sha256::digest(snapshot.as_bytes()))
}
