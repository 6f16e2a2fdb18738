use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table, Value};

use super::artifact::{run_to_artifact, RunOptions, RunSummary};
use super::config::ConfigFile;
use super::PersistError;

/// Maps short names accepted on the command line to config keys.
pub fn canonical_key(key: &str) -> &str {
    match key {
        "multiplier" => "donation_multiplier",
        "trace" | "trace_length" => "trace_depth",
        "population" => "population_size",
        other => other,
    }
}

/// `key=v1,v2,...`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationSpec {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for AblationSpec {
    type Err = PersistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| PersistError::Config(format!("ablation {s:?} must look like key=v1,v2")))?;
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(PersistError::Config(format!("ablation {s:?} lists no values")));
        }
        Ok(Self {
            key: canonical_key(key.trim()).to_string(),
            values,
        })
    }
}

fn lookup<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
    match key.split_once('.') {
        Some((head, rest)) => lookup(table.get(head)?.as_table()?, rest),
        None => table.get(key),
    }
}

fn assign(table: &mut Table, key: &str, value: Value) {
    match key.split_once('.') {
        Some((head, rest)) => {
            let inner = table
                .entry(head.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            if let Value::Table(t) = inner {
                assign(t, rest, value);
            }
        }
        None => {
            table.insert(key.to_string(), value);
        }
    }
}

/// Parses `raw` as the same TOML type as `like`, the key's default value.
fn coerce(key: &str, raw: &str, like: &Value) -> Result<Value, PersistError> {
    let bad = || PersistError::Config(format!("`{key}`: cannot use {raw:?} here"));
    Ok(match like {
        Value::Float(_) => Value::Float(raw.parse().map_err(|_| bad())?),
        Value::Integer(_) => Value::Integer(raw.parse().map_err(|_| bad())?),
        Value::Boolean(_) => Value::Boolean(raw.parse().map_err(|_| bad())?),
        Value::String(_) => Value::String(raw.to_string()),
        _ => return Err(bad()),
    })
}

/// One config text per swept value, identical except for `spec.key`.
pub fn ablation_configs(base: &str, spec: &AblationSpec) -> Result<Vec<(String, ConfigFile)>, PersistError> {
    let table: Table = toml::from_str(base).map_err(|e| PersistError::Config(e.to_string()))?;
    let defaults = Table::try_from(ConfigFile::default()).expect("defaults serialize");
    let like = lookup(&defaults, &spec.key)
        .or_else(|| lookup(&table, &spec.key))
        .ok_or_else(|| PersistError::Config(format!("unknown config key `{}`", spec.key)))?
        .clone();
    spec.values
        .iter()
        .map(|raw| {
            let mut t = table.clone();
            assign(&mut t, &spec.key, coerce(&spec.key, raw, &like)?);
            let text = toml::to_string(&t).map_err(|e| PersistError::Config(e.to_string()))?;
            Ok((raw.clone(), ConfigFile::parse(&text)?))
        })
        .collect()
}

/// Runs one artifact per value under `<root>/<key>=<value>`. The root is
/// `out_root`, else the base config's `output_dir`, else `runs`.
pub fn ablate(
    base_config: &Path,
    spec: &AblationSpec,
    out_root: Option<&Path>,
    options: impl Fn() -> RunOptions,
) -> Result<Vec<RunSummary>, PersistError> {
    let base = std::fs::read_to_string(base_config).map_err(|e| PersistError::io(base_config, e))?;
    let configs = ablation_configs(&base, spec)?;
    let root: PathBuf = match out_root {
        Some(p) => p.to_path_buf(),
        None => ConfigFile::parse(&base)?
            .output_dir
            .unwrap_or_else(|| PathBuf::from("runs")),
    };
    configs
        .into_iter()
        .map(|(raw, file)| {
            let dir = root.join(format!("{}={raw}", spec.key));
            tracing::info!(dir = %dir.display(), "ablation run");
            run_to_artifact(&file.experiment(), &dir, options())
        })
        .collect()
}
