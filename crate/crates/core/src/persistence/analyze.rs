use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::artifact::load_artifact;
use super::config::ConfigFile;
use super::{PersistError, SCHEMA_VERSION};
use crate::metrics::{
    average_change, donation_matrix, generation_stats, punishment_frequency, sem_across_runs,
    DonationMatrix, GenerationStats,
};

fn csv_header() -> String {
    format!("# schema_version: {SCHEMA_VERSION}\n")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write(path: &Path, text: &str) -> Result<(), PersistError> {
    fs::write(path, text).map_err(|e| PersistError::io(path, e))
}

/// One row per generation per run.
pub(super) fn write_generation_stats(
    path: &Path,
    runs: &[(usize, u64, Vec<GenerationStats>)],
) -> Result<(), PersistError> {
    let mut out = csv_header();
    out.push_str("run,seed,generation,mean_final_resources,mean_donation_fraction,survivor_differential,punishment_frequency\n");
    for (run, seed, stats) in runs {
        for s in stats {
            let _ = writeln!(
                out,
                "{run},{seed},{},{},{},{},{}",
                s.generation,
                s.mean_final_resources,
                s.mean_donation_fraction,
                s.survivor_differential,
                opt(s.punishment_frequency)
            );
        }
    }
    write(path, &out)
}

/// Agents as rows, generations as columns; empty cells where an agent did
/// not play.
pub(super) fn write_donation_matrix(path: &Path, m: &DonationMatrix) -> Result<(), PersistError> {
    let mut out = csv_header();
    out.push_str("agent");
    for g in &m.generations {
        let _ = write!(out, ",gen_{g}");
    }
    out.push('\n');
    for agent in &m.agents {
        out.push_str(&agent.to_string());
        let row = &m.cells[agent];
        for g in &m.generations {
            out.push(',');
            out.push_str(&opt(row.get(g).copied()));
        }
        out.push('\n');
    }
    write(path, &out)
}

/// Population-mean donation fraction per generation and its change.
pub(super) fn write_donation_trend(
    path: &Path,
    runs: &[(usize, u64, DonationMatrix)],
) -> Result<(), PersistError> {
    let mut out = csv_header();
    out.push_str("run,seed,generation,population_mean_fraction,change\n");
    for (run, seed, m) in runs {
        for (i, (g, v)) in m.generations.iter().zip(&m.population_mean).enumerate() {
            let change = (i > 0).then(|| v - m.population_mean[i - 1]);
            let _ = writeln!(out, "{run},{seed},{g},{v},{}", opt(change));
        }
    }
    write(path, &out)
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub out_dir: PathBuf,
    /// Analyze artifacts even when their configs differ beyond the seed.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub runs: usize,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Cross-run statistics for one or more artifacts.
pub fn analyze(artifacts: &[PathBuf], options: &AnalyzeOptions) -> Result<AnalyzeReport, PersistError> {
    if artifacts.is_empty() {
        return Err(PersistError::Config("analyze needs at least one artifact".into()));
    }
    let loaded = artifacts
        .iter()
        .map(|p| load_artifact(p))
        .collect::<Result<Vec<_>, _>>()?;
    let comparable = |a: &crate::evolution::ExperimentConfig| {
        let mut f = ConfigFile::from_experiment(a, None);
        f.seed = 0;
        f
    };
    let reference = comparable(&loaded[0].config);
    let mut warnings = Vec::new();
    for a in &loaded[1..] {
        if comparable(&a.config) != reference {
            let msg = format!(
                "{} and {} were run with different configs",
                loaded[0].dir.display(),
                a.dir.display()
            );
            if !options.force {
                return Err(PersistError::Incompatible(msg));
            }
            tracing::warn!("{msg}");
            warnings.push(msg);
        }
    }
    fs::create_dir_all(&options.out_dir).map_err(|e| PersistError::io(&options.out_dir, e))?;
    let mut files = Vec::new();
    let mut push = |name: &str| {
        let p = options.out_dir.join(name);
        files.push(p.clone());
        p
    };

    let mut stats = Vec::new();
    let mut matrices = Vec::new();
    let mut run_rows = csv_header();
    run_rows.push_str("run,seed,generations,average_change,punishment_frequency\n");
    for (i, a) in loaded.iter().enumerate() {
        let run = i + 1;
        let s = generation_stats(&a.records, &a.config.game)?;
        let m = donation_matrix(&a.records);
        let pf = punishment_frequency(&a.records, &a.config.game).ok();
        let _ = writeln!(
            run_rows,
            "{run},{},{},{},{}",
            a.config.seed,
            a.records.len(),
            average_change(&m.population_mean),
            opt(pf)
        );
        write_donation_matrix(&push(&format!("donation_matrix_run{run}.csv")), &m)?;
        stats.push((run, a.config.seed, s));
        matrices.push((run, a.config.seed, m));
    }
    write_generation_stats(&push("generation_stats.csv"), &stats)?;
    write_donation_trend(&push("donation_trend.csv"), &matrices)?;
    write(&push("run_summary.csv"), &run_rows)?;

    let series: Vec<Vec<f64>> = stats
        .iter()
        .map(|(_, _, s)| s.iter().map(|g| g.mean_final_resources).collect())
        .collect();
    let longest = series.iter().map(Vec::len).max().unwrap_or(0);
    let common = series.iter().map(Vec::len).min().unwrap_or(0);
    if common < longest {
        let msg = format!("runs cover different numbers of generations; summary uses the first {common}");
        tracing::warn!("{msg}");
        warnings.push(msg);
    }
    let trimmed: Vec<Vec<f64>> = series.iter().map(|s| s[..common].to_vec()).collect();
    let mut summary = csv_header();
    summary.push_str("generation,n_runs,mean_final_resources,sem\n");
    match sem_across_runs(&trimmed) {
        Ok(rows) => {
            for (g, (mean, sem)) in rows.iter().enumerate() {
                let _ = writeln!(summary, "{},{},{mean},{sem}", g + 1, trimmed.len());
            }
        }
        Err(_) => {
            let msg = format!("{} run(s): SEM needs at least 2, column left empty", trimmed.len());
            tracing::warn!("{msg}");
            warnings.push(msg);
            for (g, v) in trimmed.first().into_iter().flatten().enumerate() {
                let _ = writeln!(summary, "{},{},{v},", g + 1, trimmed.len());
            }
        }
    }
    write(&push("summary.csv"), &summary)?;
    Ok(AnalyzeReport {
        runs: loaded.len(),
        files,
        warnings,
    })
}
