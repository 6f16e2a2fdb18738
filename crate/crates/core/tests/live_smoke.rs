//! Talks to a real provider. Skipped unless `DONORSIM_LIVE=1`; the provider
//! is chosen with `DONORSIM_LIVE_PROVIDER` (`openai` or `anthropic`) and
//! `DONORSIM_LIVE_MODEL`, the key comes from `OPENAI_API_KEY` or
//! `ANTHROPIC_API_KEY`.

use donorsim::evolution::{BackendKind, ExperimentConfig};
use donorsim::game::GameConfig;
use donorsim::gateway::{ProviderConfig, ProviderKind};
use donorsim::persistence::{load_artifact, replay, run_to_artifact, RunOptions};

#[test]
fn one_small_generation_against_a_live_provider() {
    if std::env::var("DONORSIM_LIVE").as_deref() != Ok("1") {
        eprintln!("skipped: set DONORSIM_LIVE=1 to run");
        return;
    }
    let anthropic = std::env::var("DONORSIM_LIVE_PROVIDER").as_deref() == Ok("anthropic");
    let mut provider = if anthropic {
        ProviderConfig {
            kind: ProviderKind::Anthropic,
            endpoint: "https://api.anthropic.com/v1".into(),
            model: "claude-3-5-sonnet-latest".into(),
            api_key: "env:ANTHROPIC_API_KEY".into(),
            ..ProviderConfig::default()
        }
    } else {
        ProviderConfig::default()
    };
    if let Ok(model) = std::env::var("DONORSIM_LIVE_MODEL") {
        provider.model = model;
    }
    provider.requests_per_minute = Some(30.0);
    let cfg = ExperimentConfig {
        game: GameConfig {
            population_size: 4,
            rounds: 4,
            ..GameConfig::default()
        },
        generations: 1,
        backend: BackendKind::Llm,
        provider,
        ..ExperimentConfig::default()
    };
    let tmp = tempfile::tempdir().unwrap();
    let summary = run_to_artifact(&cfg, tmp.path(), RunOptions::default()).unwrap();
    assert!(summary.complete);
    let artifact = load_artifact(tmp.path()).unwrap();
    assert_eq!(artifact.records.len(), 1);
    assert!(replay(tmp.path()).unwrap().verified());
    assert!(tmp.path().join("usage.json").exists());
}
