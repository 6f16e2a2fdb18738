use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use donorsim::persistence::{
    ablate, analyze, replay, resume_artifact, run_to_artifact, AblationSpec, AnalyzeOptions,
    ConfigFile, PersistError, RunOptions, RunSummary,
};

#[derive(Parser)]
#[command(name = "donorsim", version, about = "Donor Game cultural-evolution simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment into a fresh artifact directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Sweep one key instead, e.g. `multiplier=1.5,2,3`.
        #[arg(long)]
        ablate: Option<AblationSpec>,
        /// Stop after this many generations (the artifact stays resumable).
        #[arg(long)]
        stop_after: Option<u32>,
    },
    /// Continue an interrupted artifact.
    Resume {
        artifact: PathBuf,
        /// Refuse unless this config matches the artifact's.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        stop_after: Option<u32>,
    },
    /// Write cross-run statistics as CSV.
    Analyze {
        #[arg(required = true)]
        artifacts: Vec<PathBuf>,
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
        /// Accept artifacts whose configs differ beyond the seed.
        #[arg(long)]
        force: bool,
    },
    /// Re-execute recorded decisions and check the artifact agrees.
    Replay { artifact: PathBuf },
    /// One run per value of each swept key.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// Root directory for the artifacts; defaults to `output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(required = true)]
        specs: Vec<AblationSpec>,
    },
}

fn report(summary: &RunSummary) {
    let state = if summary.complete { "complete" } else { "incomplete" };
    println!(
        "{}: {}/{} generations ({state})",
        summary.dir.display(),
        summary.completed,
        summary.planned
    );
}

fn sweep(config: &Path, output: Option<&PathBuf>, specs: &[AblationSpec]) -> Result<(), PersistError> {
    for spec in specs {
        for s in ablate(config, spec, output.map(|p| p.as_path()), RunOptions::default)? {
            report(&s);
        }
    }
    Ok(())
}

fn execute(command: Command) -> Result<ExitCode, PersistError> {
    match command {
        Command::Run {
            config,
            output,
            ablate: Some(spec),
            ..
        } => sweep(&config, output.as_ref(), &[spec])?,
        Command::Run {
            config,
            output,
            ablate: None,
            stop_after,
        } => {
            let file = ConfigFile::load(&config)?;
            let dir = output.or(file.output_dir.clone()).ok_or_else(|| {
                PersistError::Config("`output_dir` is not set; add it to the config or pass --output".into())
            })?;
            let options = RunOptions {
                stop_after,
                ..RunOptions::default()
            };
            report(&run_to_artifact(&file.experiment(), &dir, options)?);
        }
        Command::Resume {
            artifact,
            config,
            stop_after,
        } => {
            let options = RunOptions {
                stop_after,
                ..RunOptions::default()
            };
            report(&resume_artifact(&artifact, config.as_deref(), options)?);
        }
        Command::Analyze {
            artifacts,
            out,
            force,
        } => {
            let r = analyze(&artifacts, &AnalyzeOptions { out_dir: out, force })?;
            for f in &r.files {
                println!("wrote {}", f.display());
            }
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Replay { artifact } => {
            let r = replay(&artifact)?;
            match &r.divergence {
                None => println!(
                    "verified: {} generations, {} decisions, 0 divergences",
                    r.generations, r.decisions
                ),
                Some(d) => {
                    println!("divergence at {d}");
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Ablate {
            config,
            output,
            specs,
        } => sweep(&config, output.as_ref(), &specs)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
