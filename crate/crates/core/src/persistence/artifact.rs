use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::analyze::{write_donation_matrix, write_donation_trend, write_generation_stats};
use super::config::{config_hash, config_snapshot, ConfigFile};
use super::{PersistError, SCHEMA_VERSION};
use crate::agents::AgentRuntime;
use crate::evolution::{
    run_experiment, BackendKind, Event, EvolutionError, ExperimentConfig, GenerationRecord,
    Recorder,
};
use crate::gateway::{Gateway, RequestSettings, Sleeper, Transport, UsageLedger};
use crate::metrics::{donation_matrix, generation_stats};

pub(super) const HEADER: &str = r#"{"kind":"header","schema_version":1}"#;

const MANIFEST: &str = "manifest.json";
const CONFIG: &str = "config.toml";
const EVENTS: &str = "events.jsonl";
const GENERATIONS: &str = "generations.jsonl";
const LLM_LOG: &str = "llm_log.jsonl";
const USAGE: &str = "usage.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub backend: BackendKind,
    pub planned_generations: u32,
    pub completed_generations: u32,
    pub complete: bool,
}

/// Knobs for a run that are not part of the experiment config.
#[derive(Default)]
pub struct RunOptions {
    /// Stop cleanly after this many generations, leaving a resumable artifact.
    pub stop_after: Option<u32>,
    /// Replaces the transport built from `[provider]`.
    pub transport: Option<Box<dyn Transport>>,
    pub sleeper: Option<Arc<dyn Sleeper>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub completed: u32,
    pub planned: u32,
    pub complete: bool,
    /// Generations found complete before this invocation.
    pub resumed_from: u32,
}

/// A loaded artifact.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub config: ExperimentConfig,
    pub snapshot: String,
    pub records: Vec<GenerationRecord>,
    pub events: Vec<Event>,
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), PersistError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| PersistError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PersistError::io(path, e))
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), PersistError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join(MANIFEST), &text)
}

fn read_manifest(dir: &Path) -> Result<Manifest, PersistError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| PersistError::io(&path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| PersistError::Corrupt(format!("{}: {e}", path.display())))?;
    let version = value.get("schema_version").and_then(Value::as_u64);
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(PersistError::SchemaMismatch {
            found: version.unwrap_or(0) as u32,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| PersistError::Corrupt(format!("{}: {e}", path.display())))
}

struct JsonlRecorder {
    dir: PathBuf,
    manifest: Manifest,
    events: BufWriter<File>,
    generations: BufWriter<File>,
    records: Vec<GenerationRecord>,
}

fn open_append(path: &Path) -> Result<BufWriter<File>, PersistError> {
    OpenOptions::new()
        .append(true)
        .create(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| PersistError::io(path, e))
}

fn record_err(e: impl std::fmt::Display) -> EvolutionError {
    EvolutionError::Record(e.to_string())
}

impl Recorder for JsonlRecorder {
    fn event(&mut self, event: &Event) -> Result<(), EvolutionError> {
        serde_json::to_writer(&mut self.events, event).map_err(record_err)?;
        self.events.write_all(b"\n").map_err(record_err)
    }

    fn generation(&mut self, record: &GenerationRecord) -> Result<(), EvolutionError> {
        serde_json::to_writer(&mut self.generations, record).map_err(record_err)?;
        self.generations.write_all(b"\n").map_err(record_err)?;
        self.events.flush().map_err(record_err)?;
        self.generations.flush().map_err(record_err)?;
        self.records.push(record.clone());
        self.manifest.completed_generations = self.records.len() as u32;
        self.manifest.complete = self.manifest.completed_generations == self.manifest.planned_generations;
        write_manifest(&self.dir, &self.manifest).map_err(record_err)
    }
}

/// Writes the per-artifact metrics CSVs for the completed generations.
pub fn write_metrics(
    dir: &Path,
    cfg: &ExperimentConfig,
    records: &[GenerationRecord],
) -> Result<(), PersistError> {
    let metrics = dir.join("metrics");
    fs::create_dir_all(&metrics).map_err(|e| PersistError::io(&metrics, e))?;
    let stats = generation_stats(records, &cfg.game)?;
    write_generation_stats(&metrics.join("generation_stats.csv"), &[(1, cfg.seed, stats)])?;
    let matrix = donation_matrix(records);
    write_donation_matrix(&metrics.join("donation_matrix.csv"), &matrix)?;
    write_donation_trend(&metrics.join("donation_trend.csv"), &[(1, cfg.seed, matrix)])?;
    Ok(())
}

fn execute(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: Manifest,
    completed: Vec<GenerationRecord>,
    options: RunOptions,
) -> Result<RunSummary, PersistError> {
    let resumed_from = completed.len() as u32;
    let gateway = match cfg.backend {
        BackendKind::Llm => {
            let transport = match options.transport {
                Some(t) => t,
                None => cfg.provider.transport()?,
            };
            let usage = match fs::read_to_string(dir.join(USAGE)) {
                Ok(text) => serde_json::from_str(&text)
                    .map_err(|e| PersistError::Corrupt(format!("{USAGE}: {e}")))?,
                Err(_) => UsageLedger::default(),
            };
            let log_path = dir.join(LLM_LOG);
            let fresh = !log_path.exists();
            let mut log = OpenOptions::new()
                .append(true)
                .create(true)
                .open(&log_path)
                .map_err(|e| PersistError::io(&log_path, e))?;
            if fresh {
                writeln!(log, "{HEADER}").map_err(|e| PersistError::io(&log_path, e))?;
            }
            let mut gw = Gateway::new(transport)
                .with_rate_limit(cfg.provider.requests_per_minute)
                .with_prices(cfg.provider.prices())
                .with_retry_seed(cfg.seed)
                .with_usage(usage)
                .with_log(Box::new(log));
            if let Some(s) = options.sleeper {
                gw = gw.with_sleeper(s);
            }
            Some(gw)
        }
        _ => None,
    };
    let settings = match cfg.backend {
        BackendKind::Llm => cfg.provider.settings(),
        BackendKind::Mock => RequestSettings::default(),
        BackendKind::Scripted => RequestSettings {
            provider_tag: "scripted".into(),
            ..RequestSettings::default()
        },
    };
    let runtime = AgentRuntime::new(&cfg.game, gateway.as_ref(), settings, cfg.seed);
    let mut recorder = JsonlRecorder {
        dir: dir.to_path_buf(),
        manifest,
        events: open_append(&dir.join(EVENTS))?,
        generations: open_append(&dir.join(GENERATIONS))?,
        records: completed.clone(),
    };
    let outcome = run_experiment(cfg, &runtime, &mut recorder, completed, options.stop_after);
    recorder.events.flush().map_err(|e| PersistError::io(&dir.join(EVENTS), e))?;
    recorder
        .generations
        .flush()
        .map_err(|e| PersistError::io(&dir.join(GENERATIONS), e))?;
    if let Some(gw) = &gateway {
        let mut text = serde_json::to_string_pretty(&gw.usage()).expect("usage serializes");
        text.push('\n');
        write_atomic(&dir.join(USAGE), &text)?;
    }
    write_metrics(dir, cfg, &recorder.records)?;
    if let Err(e) = outcome {
        tracing::error!(
            completed = recorder.records.len(),
            "run aborted; continue it with `donorsim resume {}`",
            dir.display()
        );
        return Err(e.into());
    }
    Ok(RunSummary {
        dir: dir.to_path_buf(),
        completed: recorder.manifest.completed_generations,
        planned: recorder.manifest.planned_generations,
        complete: recorder.manifest.complete,
        resumed_from,
    })
}

/// Starts a fresh artifact in `dir` and runs the experiment.
pub fn run_to_artifact(
    cfg: &ExperimentConfig,
    dir: &Path,
    options: RunOptions,
) -> Result<RunSummary, PersistError> {
    cfg.validate().map_err(|e| PersistError::Config(e.to_string()))?;
    if dir.join(MANIFEST).exists() {
        return Err(PersistError::AlreadyExists(dir.to_path_buf()));
    }
    fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
    let snapshot = config_snapshot(cfg);
    write_atomic(&dir.join(CONFIG), &snapshot)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash(&snapshot),
        backend: cfg.backend,
        planned_generations: cfg.generations,
        completed_generations: 0,
        complete: false,
    };
    write_manifest(dir, &manifest)?;
    for name in [EVENTS, GENERATIONS] {
        let path = dir.join(name);
        fs::write(&path, format!("{HEADER}\n")).map_err(|e| PersistError::io(&path, e))?;
    }
    let usage = dir.join(USAGE);
    if usage.exists() {
        fs::remove_file(&usage).map_err(|e| PersistError::io(&usage, e))?;
    }
    tracing::info!(dir = %dir.display(), generations = cfg.generations, "starting run");
    execute(cfg, dir, manifest, Vec::new(), options)
}

fn check_header(path: &Path, first: Option<&str>) -> Result<(), PersistError> {
    let value: Value = first
        .and_then(|l| serde_json::from_str(l).ok())
        .ok_or_else(|| PersistError::Corrupt(format!("{} has no header line", path.display())))?;
    let version = value.get("schema_version").and_then(Value::as_u64);
    if version != Some(SCHEMA_VERSION as u64) {
        return Err(PersistError::SchemaMismatch {
            found: version.unwrap_or(0) as u32,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

/// Complete lines with their end offsets; a trailing fragment without a
/// newline is ignored.
fn complete_lines(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for chunk in text.split_inclusive('\n') {
        offset += chunk.len();
        if chunk.ends_with('\n') {
            out.push((chunk.trim_end_matches('\n'), offset));
        }
    }
    out
}

fn read_text(path: &Path) -> Result<String, PersistError> {
    fs::read_to_string(path).map_err(|e| PersistError::io(path, e))
}

fn read_config(dir: &Path, manifest: &Manifest) -> Result<(String, ExperimentConfig), PersistError> {
    let snapshot = read_text(&dir.join(CONFIG))?;
    let found = config_hash(&snapshot);
    if found != manifest.config_hash {
        return Err(PersistError::ConfigMismatch {
            expected: manifest.config_hash.clone(),
            found,
        });
    }
    let cfg = ConfigFile::parse(&snapshot)?.experiment();
    Ok((snapshot, cfg))
}

fn parse_records(path: &Path, text: &str) -> Result<Vec<(GenerationRecord, usize)>, PersistError> {
    let lines = complete_lines(text);
    check_header(path, lines.first().map(|l| l.0))?;
    let mut out = Vec::new();
    for (line, end) in lines.into_iter().skip(1) {
        let Ok(record) = serde_json::from_str::<GenerationRecord>(line) else {
            break;
        };
        if record.generation != out.len() as u32 + 1 {
            return Err(PersistError::Corrupt(format!(
                "{}: expected generation {}, found {}",
                path.display(),
                out.len() + 1,
                record.generation
            )));
        }
        out.push((record, end));
    }
    Ok(out)
}

/// Offsets just past the header and past each `generation_end` event.
fn event_checkpoints(path: &Path, text: &str) -> Result<(usize, Vec<usize>), PersistError> {
    let lines = complete_lines(text);
    check_header(path, lines.first().map(|l| l.0))?;
    let header_end = lines[0].1;
    let ends = lines
        .iter()
        .skip(1)
        .filter(|(l, _)| l.starts_with(r#"{"kind":"generation_end""#))
        .map(|(_, end)| *end)
        .collect();
    Ok((header_end, ends))
}

fn truncate(path: &Path, len: usize) -> Result<(), PersistError> {
    let file = OpenOptions::new()
        .write(true)
        .open(path)
        .map_err(|e| PersistError::io(path, e))?;
    file.set_len(len as u64).map_err(|e| PersistError::io(path, e))
}

/// Continues an interrupted artifact from its last completed generation.
/// A complete artifact is left untouched. When `config` is given it must
/// hash to the artifact's recorded config.
pub fn resume_artifact(
    dir: &Path,
    config: Option<&Path>,
    options: RunOptions,
) -> Result<RunSummary, PersistError> {
    let mut manifest = read_manifest(dir)?;
    let (_, cfg) = read_config(dir, &manifest)?;
    if let Some(path) = config {
        let supplied = config_hash(&config_snapshot(&ConfigFile::load(path)?.experiment()));
        if supplied != manifest.config_hash {
            return Err(PersistError::ConfigMismatch {
                expected: manifest.config_hash.clone(),
                found: supplied,
            });
        }
    }
    if manifest.complete {
        tracing::info!(dir = %dir.display(), "artifact is already complete");
        return Ok(RunSummary {
            dir: dir.to_path_buf(),
            completed: manifest.completed_generations,
            planned: manifest.planned_generations,
            complete: true,
            resumed_from: manifest.completed_generations,
        });
    }
    let gen_path = dir.join(GENERATIONS);
    let ev_path = dir.join(EVENTS);
    let gen_text = read_text(&gen_path)?;
    let ev_text = read_text(&ev_path)?;
    let records = parse_records(&gen_path, &gen_text)?;
    let (ev_header, ev_ends) = event_checkpoints(&ev_path, &ev_text)?;
    let completed = records.len().min(ev_ends.len());
    let gen_cut = if completed == 0 {
        complete_lines(&gen_text)[0].1
    } else {
        records[completed - 1].1
    };
    let ev_cut = if completed == 0 {
        ev_header
    } else {
        ev_ends[completed - 1]
    };
    truncate(&gen_path, gen_cut)?;
    truncate(&ev_path, ev_cut)?;
    let records: Vec<GenerationRecord> = records.into_iter().take(completed).map(|(r, _)| r).collect();
    manifest.completed_generations = completed as u32;
    manifest.complete = false;
    write_manifest(dir, &manifest)?;
    tracing::info!(dir = %dir.display(), completed, "resuming");
    execute(&cfg, dir, manifest, records, options)
}

/// Reads a whole artifact. Partial trailing lines are ignored.
pub fn load_artifact(dir: &Path) -> Result<Artifact, PersistError> {
    let manifest = read_manifest(dir)?;
    let (snapshot, config) = read_config(dir, &manifest)?;
    let gen_path = dir.join(GENERATIONS);
    let records = parse_records(&gen_path, &read_text(&gen_path)?)?
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    let ev_path = dir.join(EVENTS);
    let ev_text = read_text(&ev_path)?;
    let lines = complete_lines(&ev_text);
    check_header(&ev_path, lines.first().map(|l| l.0))?;
    let events = lines
        .iter()
        .skip(1)
        .enumerate()
        .map(|(i, (l, _))| {
            serde_json::from_str(l).map_err(|e| {
                PersistError::Corrupt(format!("{} line {}: {e}", ev_path.display(), i + 2))
            })
        })
        .collect::<Result<Vec<Event>, _>>()?;
    Ok(Artifact {
        dir: dir.to_path_buf(),
        manifest,
        config,
        snapshot,
        records,
        events,
    })
}
