//! The generational loop: two role-swapped games per generation, selection
//! of the top half by mean score, and new agents built from the survivors'
//! advice.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    AgentError, AgentProfile, AgentRuntime, Backend, DonationContext, MockPersona, SurvivorAdvice,
};
use crate::dsl::{corpus_program, parse_strategy, StrategyProgram, CORPUS_NAMES};
use crate::game::{init_game, AgentId, DonationEvent, GameConfig, GameError, ResourceLedger, TraceEntry};
use crate::gateway::ProviderConfig;
use crate::scheduler::{make_schedule, round_capacity, swap_roles, Schedule, ScheduleError};
use crate::seeds::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Llm,
    #[default]
    Mock,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptedConfig {
    /// Corpus names or inline DSL sources, assigned to founders in turn.
    pub programs: Vec<String>,
    /// Half-width of the uniform shift applied to an offspring's initial
    /// fraction and trace offset.
    pub mutation: f64,
}

impl Default for ScriptedConfig {
    fn default() -> Self {
        Self {
            programs: vec!["claude_gen1".into()],
            mutation: 0.05,
        }
    }
}

impl ScriptedConfig {
    pub fn resolve(&self) -> Result<Vec<(String, StrategyProgram)>, String> {
        self.programs
            .iter()
            .map(|entry| {
                if CORPUS_NAMES.contains(&entry.as_str()) {
                    corpus_program(entry)
                        .map(|p| (entry.clone(), p))
                        .map_err(|e| e.to_string())
                } else {
                    parse_strategy(entry)
                        .map(|p| ("inline".to_string(), p))
                        .map_err(|e| format!("scripted.programs entry {entry:?}: {e}"))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub generations: u32,
    pub seed: u64,
    pub backend: BackendKind,
    pub provider: ProviderConfig,
    pub scripted: ScriptedConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            game: GameConfig::default(),
            generations: 10,
            seed: 0,
            backend: BackendKind::Mock,
            provider: ProviderConfig::default(),
            scripted: ScriptedConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Checks every key and names the first offending one.
    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.game
            .validate()
            .map_err(|e| EvolutionError::Config(e.to_string()))?;
        let bad = |key: &str, why: &str| Err(EvolutionError::Config(format!("invalid config `{key}`: {why}")));
        if self.generations < 1 {
            return bad("generations", "must be at least 1");
        }
        let capacity = round_capacity(self.game.population_size);
        if self.game.rounds > capacity {
            return bad(
                "rounds",
                &format!("at most {capacity} rounds keep ordered pairs unique for this population"),
            );
        }
        match self.backend {
            BackendKind::Scripted => {
                if self.scripted.programs.is_empty() {
                    return bad("scripted.programs", "needs at least one program");
                }
                if !(self.scripted.mutation.is_finite() && (0.0..=1.0).contains(&self.scripted.mutation)) {
                    return bad("scripted.mutation", "must lie in [0, 1]");
                }
                self.scripted.resolve().map_err(EvolutionError::Config)?;
            }
            BackendKind::Llm => self
                .provider
                .validate()
                .map_err(EvolutionError::Config)?,
            BackendKind::Mock => {}
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("generation {generation}: {source}")]
    Agent {
        generation: u32,
        #[source]
        source: AgentError,
    },
    #[error("recording failed: {0}")]
    Record(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub run1: f64,
    pub run2: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offspring {
    pub profile: AgentProfile,
    /// The survivors whose advice the new agent saw.
    pub advice: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub population: Vec<AgentProfile>,
    pub schedules: [Schedule; 2],
    pub transcripts: [Vec<DonationEvent>; 2],
    pub scores: BTreeMap<AgentId, Score>,
    /// Best first.
    pub survivors: Vec<AgentId>,
    pub offspring: Vec<Offspring>,
    pub parse_failures: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<GenerationRecord>,
}

/// One line of the event stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    GenerationStart {
        generation: u32,
        system_prompt: String,
    },
    StrategyElicited {
        generation: u32,
        agent: AgentId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prompt: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response: Option<String>,
        strategy_text: String,
    },
    RunStart {
        generation: u32,
        run: u8,
        balances: ResourceLedger,
    },
    Decision {
        generation: u32,
        run: u8,
        round: u32,
        donor: AgentId,
        recipient: AgentId,
        donor_resources: f64,
        recipient_resources: f64,
        trace: Vec<TraceEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prompt: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response: Option<String>,
        donation: f64,
        punishment_spend: f64,
        clamped: bool,
        parse_failed: bool,
    },
    RoundEnd {
        generation: u32,
        run: u8,
        round: u32,
        balances: ResourceLedger,
    },
    RunEnd {
        generation: u32,
        run: u8,
        balances: ResourceLedger,
    },
    Survivors {
        generation: u32,
        survivors: Vec<AgentId>,
    },
    GenerationEnd {
        generation: u32,
    },
}

/// Receives events as they happen and records as generations complete.
pub trait Recorder {
    fn event(&mut self, event: &Event) -> Result<(), EvolutionError>;
    fn generation(&mut self, record: &GenerationRecord) -> Result<(), EvolutionError>;
}

#[derive(Debug, Default)]
pub struct MemoryRecorder {
    pub events: Vec<Event>,
    pub records: Vec<GenerationRecord>,
}

impl Recorder for MemoryRecorder {
    fn event(&mut self, event: &Event) -> Result<(), EvolutionError> {
        self.events.push(event.clone());
        Ok(())
    }

    fn generation(&mut self, record: &GenerationRecord) -> Result<(), EvolutionError> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// Total order used for selection: higher mean first, then higher run-1
/// score, then the smaller id.
pub fn compare_scores(a: (AgentId, &Score), b: (AgentId, &Score)) -> Ordering {
    b.1.mean
        .total_cmp(&a.1.mean)
        .then(b.1.run1.total_cmp(&a.1.run1))
        .then(a.0.cmp(&b.0))
}

/// The top half of `scores`, best first.
pub fn select_survivors(scores: &BTreeMap<AgentId, Score>) -> Vec<AgentId> {
    let mut ranked: Vec<(AgentId, &Score)> = scores.iter().map(|(id, s)| (*id, s)).collect();
    ranked.sort_by(|a, b| compare_scores(*a, *b));
    ranked.truncate(scores.len() / 2);
    ranked.into_iter().map(|(id, _)| id).collect()
}

fn agent_err(generation: u32) -> impl Fn(AgentError) -> EvolutionError {
    move |source| EvolutionError::Agent { generation, source }
}

/// Founding agents for generation 1, with their strategies elicited.
pub fn founding_population(
    cfg: &ExperimentConfig,
    runtime: &AgentRuntime<'_>,
    recorder: &mut dyn Recorder,
) -> Result<Vec<AgentProfile>, EvolutionError> {
    let programs = match cfg.backend {
        BackendKind::Scripted => cfg.scripted.resolve().map_err(EvolutionError::Config)?,
        _ => Vec::new(),
    };
    let mut population = Vec::with_capacity(cfg.game.population_size);
    for m in 1..=cfg.game.population_size as u32 {
        let id = AgentId::new(1, m);
        let backend = match cfg.backend {
            BackendKind::Llm => Backend::Llm,
            BackendKind::Mock => Backend::Mock {
                persona: MockPersona::sample(cfg.seed, 1, m),
            },
            BackendKind::Scripted => {
                let (origin, program) = programs[(m as usize - 1) % programs.len()].clone();
                Backend::Scripted { origin, program }
            }
        };
        let mut profile = AgentProfile {
            id,
            strategy_text: String::new(),
            backend,
        };
        elicit(runtime, &mut profile, 1, &[], recorder)?;
        population.push(profile);
    }
    Ok(population)
}

fn elicit(
    runtime: &AgentRuntime<'_>,
    profile: &mut AgentProfile,
    generation: u32,
    advice: &[SurvivorAdvice],
    recorder: &mut dyn Recorder,
) -> Result<(), EvolutionError> {
    let elicited = runtime
        .elicit_strategy(profile, generation, advice)
        .map_err(agent_err(generation))?;
    profile.strategy_text = elicited.strategy_text.clone();
    let (request_id, prompt, response) = match elicited.exchange {
        Some(x) => (Some(x.request_id), Some(x.prompt), Some(x.response)),
        None => (None, None, None),
    };
    recorder.event(&Event::StrategyElicited {
        generation,
        agent: profile.id,
        request_id,
        prompt,
        response,
        strategy_text: elicited.strategy_text,
    })
}

struct RunOutcome {
    history: Vec<DonationEvent>,
    finals: ResourceLedger,
    parse_failures: u32,
}

fn play_run(
    population: &[AgentProfile],
    game: &GameConfig,
    schedule: &Schedule,
    generation: u32,
    run: u8,
    runtime: &AgentRuntime<'_>,
    recorder: &mut dyn Recorder,
) -> Result<RunOutcome, EvolutionError> {
    let ids: Vec<AgentId> = population.iter().map(|p| p.id).collect();
    let profiles: BTreeMap<AgentId, &AgentProfile> = population.iter().map(|p| (p.id, p)).collect();
    let mut state = init_game(game.clone(), &ids)?;
    recorder.event(&Event::RunStart {
        generation,
        run,
        balances: state.ledger.clone(),
    })?;
    let mut parse_failures = 0;
    for matching in &schedule.rounds {
        let round = state.round;
        for pairing in matching {
            let donor = profiles[&pairing.donor];
            let trace = state.trace_for(pairing.recipient)?;
            let donor_resources = state.balance(pairing.donor)?;
            let recipient_resources = state.balance(pairing.recipient)?;
            let ctx = DonationContext {
                game,
                donor,
                recipient: pairing.recipient,
                recipient_resources,
                donor_resources,
                round,
                generation,
                run,
                trace: &trace,
                punishment_enabled: game.punishment_enabled,
            };
            let decided = runtime.decide(&ctx).map_err(agent_err(generation))?;
            let d = &decided.decision;
            state.apply_donation(pairing.donor, pairing.recipient, d.donation)?;
            if d.punishment_spend > 0.0 {
                state.apply_punishment(pairing.donor, pairing.recipient, d.punishment_spend)?;
            }
            if d.parse_failed {
                parse_failures += 1;
            }
            let (request_id, prompt, response) = match decided.exchange {
                Some(x) => (Some(x.request_id), Some(x.prompt), Some(x.response)),
                None => (None, None, None),
            };
            recorder.event(&Event::Decision {
                generation,
                run,
                round,
                donor: pairing.donor,
                recipient: pairing.recipient,
                donor_resources,
                recipient_resources,
                trace,
                request_id,
                prompt,
                response,
                donation: d.donation,
                punishment_spend: d.punishment_spend,
                clamped: d.clamped,
                parse_failed: d.parse_failed,
            })?;
        }
        state.advance_round()?;
        recorder.event(&Event::RoundEnd {
            generation,
            run,
            round,
            balances: state.ledger.clone(),
        })?;
    }
    recorder.event(&Event::RunEnd {
        generation,
        run,
        balances: state.ledger.clone(),
    })?;
    Ok(RunOutcome {
        history: state.history,
        finals: state.ledger,
        parse_failures,
    })
}

/// Plays generation `generation` and, unless it is the last, creates the
/// agents that will replace the non-survivors.
pub fn run_generation(
    population: &[AgentProfile],
    cfg: &ExperimentConfig,
    generation: u32,
    runtime: &AgentRuntime<'_>,
    recorder: &mut dyn Recorder,
) -> Result<GenerationRecord, EvolutionError> {
    if population.len() != cfg.game.population_size {
        return Err(GameError::PopulationMismatch {
            expected: cfg.game.population_size,
            actual: population.len(),
        }
        .into());
    }
    recorder.event(&Event::GenerationStart {
        generation,
        system_prompt: runtime.system_prompt.clone(),
    })?;
    let mut ids: Vec<AgentId> = population.iter().map(|p| p.id).collect();
    ids.sort();
    let first = make_schedule(
        &ids,
        cfg.game.rounds,
        derive_seed(cfg.seed, Stream::Schedule, &[generation as u64]),
    )?;
    let second = swap_roles(&first);
    let one = play_run(population, &cfg.game, &first, generation, 1, runtime, recorder)?;
    let two = play_run(population, &cfg.game, &second, generation, 2, runtime, recorder)?;

    let scores: BTreeMap<AgentId, Score> = ids
        .iter()
        .map(|&id| {
            let run1 = one.finals.get(id).unwrap_or(0.0);
            let run2 = two.finals.get(id).unwrap_or(0.0);
            (
                id,
                Score {
                    run1,
                    run2,
                    mean: (run1 + run2) / 2.0,
                },
            )
        })
        .collect();
    let survivors = select_survivors(&scores);
    recorder.event(&Event::Survivors {
        generation,
        survivors: survivors.clone(),
    })?;

    let offspring = if generation < cfg.generations {
        spawn_offspring(population, &scores, &survivors, cfg, generation + 1, runtime, recorder)?
    } else {
        Vec::new()
    };
    recorder.event(&Event::GenerationEnd { generation })?;
    let record = GenerationRecord {
        generation,
        population: population.to_vec(),
        schedules: [first, second],
        transcripts: [one.history, two.history],
        scores,
        survivors,
        offspring,
        parse_failures: one.parse_failures + two.parse_failures,
    };
    recorder.generation(&record)?;
    Ok(record)
}

/// New agents for generation `new_generation`, one per non-survivor.
pub fn spawn_offspring(
    population: &[AgentProfile],
    scores: &BTreeMap<AgentId, Score>,
    survivors: &[AgentId],
    cfg: &ExperimentConfig,
    new_generation: u32,
    runtime: &AgentRuntime<'_>,
    recorder: &mut dyn Recorder,
) -> Result<Vec<Offspring>, EvolutionError> {
    let by_id: BTreeMap<AgentId, &AgentProfile> = population.iter().map(|p| (p.id, p)).collect();
    let parents: Vec<&AgentProfile> = survivors.iter().map(|id| by_id[id]).collect();
    let advice: Vec<SurvivorAdvice> = parents
        .iter()
        .map(|p| SurvivorAdvice {
            strategy_text: p.strategy_text.clone(),
            score: scores[&p.id].mean,
        })
        .collect();
    let count = population.len() - survivors.len();
    let mut out = Vec::with_capacity(count);
    for m in 1..=count as u32 {
        let id = AgentId::new(new_generation, m);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            cfg.seed,
            Stream::Mutation,
            &[new_generation as u64, m as u64],
        ));
        let backend = match cfg.backend {
            BackendKind::Llm => Backend::Llm,
            BackendKind::Mock | BackendKind::Scripted => {
                let parent = parents[rng.random_range(0..parents.len())];
                match &parent.backend {
                    Backend::Mock { persona } => Backend::Mock {
                        persona: persona.offspring(&mut rng),
                    },
                    Backend::Scripted { program, .. } => {
                        let w = cfg.scripted.mutation;
                        let (di, doff) = if w > 0.0 {
                            (rng.random_range(-w..=w), rng.random_range(-w..=w))
                        } else {
                            (0.0, 0.0)
                        };
                        Backend::Scripted {
                            origin: parent.id.to_string(),
                            program: program.perturbed(di, doff),
                        }
                    }
                    Backend::Llm => Backend::Llm,
                }
            }
        };
        let mut profile = AgentProfile {
            id,
            strategy_text: String::new(),
            backend,
        };
        elicit(runtime, &mut profile, new_generation, &advice, recorder)?;
        out.push(Offspring {
            profile,
            advice: survivors.to_vec(),
        });
    }
    Ok(out)
}

/// The population that plays the generation after `record`.
pub fn next_population(record: &GenerationRecord) -> Vec<AgentProfile> {
    let mut next: Vec<AgentProfile> = record
        .population
        .iter()
        .filter(|p| record.survivors.contains(&p.id))
        .cloned()
        .chain(record.offspring.iter().map(|o| o.profile.clone()))
        .collect();
    next.sort_by_key(|p| p.id);
    next
}

/// Runs all generations, continuing after `completed` when resuming.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    runtime: &AgentRuntime<'_>,
    recorder: &mut dyn Recorder,
    completed: Vec<GenerationRecord>,
    stop_after: Option<u32>,
) -> Result<ExperimentResult, EvolutionError> {
    cfg.validate()?;
    let mut records = completed;
    let mut population = match records.last() {
        Some(last) => next_population(last),
        None => founding_population(cfg, runtime, recorder)?,
    };
    let start = records.len() as u32 + 1;
    for generation in start..=cfg.generations {
        if stop_after.is_some_and(|n| generation > n) {
            break;
        }
        let record = run_generation(&population, cfg, generation, runtime, recorder)?;
        let mean = record.scores.values().map(|s| s.mean).sum::<f64>() / record.scores.len() as f64;
        tracing::info!(generation, mean_final_resources = mean, "generation complete");
        population = next_population(&record);
        records.push(record);
    }
    Ok(ExperimentResult { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::RequestSettings;

    fn scripted_cfg(programs: &[&str], mutation: f64, generations: u32) -> ExperimentConfig {
        ExperimentConfig {
            generations,
            backend: BackendKind::Scripted,
            scripted: ScriptedConfig {
                programs: programs.iter().map(|s| s.to_string()).collect(),
                mutation,
            },
            ..ExperimentConfig::default()
        }
    }

    fn run(cfg: &ExperimentConfig) -> (ExperimentResult, MemoryRecorder) {
        let rt = AgentRuntime::new(&cfg.game, None, RequestSettings::default(), cfg.seed);
        let mut rec = MemoryRecorder::default();
        let res = run_experiment(cfg, &rt, &mut rec, Vec::new(), None).unwrap();
        (res, rec)
    }

    fn average(record: &GenerationRecord) -> f64 {
        record.scores.values().map(|s| s.mean).sum::<f64>() / record.scores.len() as f64
    }

    #[test]
    fn all_full_donors_hit_the_bound_every_generation() {
        let (res, _) = run(&scripted_cfg(&["init 100%"], 0.0, 10));
        assert_eq!(res.records.len(), 10);
        for r in &res.records {
            assert_eq!(average(r), 30720.0);
            for s in r.scores.values() {
                assert_eq!(s.mean, 30720.0);
                assert_eq!(s.run1.min(s.run2), 0.0);
            }
        }
    }

    #[test]
    fn all_zero_donors_keep_the_endowment() {
        let (res, _) = run(&scripted_cfg(&["init 0%"], 0.0, 2));
        for s in res.records[0].scores.values() {
            assert_eq!((s.run1, s.run2, s.mean), (10.0, 10.0, 10.0));
        }
    }

    #[test]
    fn lineage_and_id_counts() {
        let (res, _) = run(&ExperimentConfig::default());
        let mut ids = std::collections::BTreeSet::new();
        for (i, r) in res.records.iter().enumerate() {
            assert_eq!(r.survivors.len(), 6);
            assert_eq!(r.population.len(), 12);
            ids.extend(r.population.iter().map(|p| p.id));
            if i + 1 < res.records.len() {
                assert_eq!(r.offspring.len(), 6);
                for (k, o) in r.offspring.iter().enumerate() {
                    assert_eq!(o.profile.id, AgentId::new(r.generation + 1, k as u32 + 1));
                    assert_eq!(o.advice, r.survivors);
                }
            } else {
                assert!(r.offspring.is_empty());
            }
        }
        assert_eq!(ids.len(), 66);
    }

    #[test]
    fn each_agent_is_a_final_round_recipient_once() {
        let (res, _) = run(&ExperimentConfig {
            generations: 1,
            ..ExperimentConfig::default()
        });
        let r = &res.records[0];
        let mut seen: Vec<AgentId> = r.schedules[0].final_round_recipients();
        seen.extend(r.schedules[1].final_round_recipients());
        seen.sort();
        let mut all: Vec<AgentId> = r.population.iter().map(|p| p.id).collect();
        all.sort();
        assert_eq!(seen, all);
    }

    #[test]
    fn survivors_keep_their_strategies() {
        let (res, _) = run(&ExperimentConfig {
            generations: 3,
            ..ExperimentConfig::default()
        });
        for pair in res.records.windows(2) {
            for id in &pair[0].survivors {
                let before = pair[0].population.iter().find(|p| p.id == *id).unwrap();
                let after = pair[1].population.iter().find(|p| p.id == *id).unwrap();
                assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn selection_tie_breaks() {
        let s = |mean, run1| Score {
            run1,
            run2: 2.0 * mean - run1,
            mean,
        };
        let equal: BTreeMap<_, _> = (1..=12).map(|m| (AgentId::new(1, m), s(5.0, 5.0))).collect();
        let picked = select_survivors(&equal);
        assert_eq!(picked, (1..=6).map(|m| AgentId::new(1, m)).collect::<Vec<_>>());

        let mut straddle: BTreeMap<_, _> =
            (1..=4).map(|m| (AgentId::new(1, m), s(10.0 - m as f64, 0.0))).collect();
        straddle.insert(AgentId::new(1, 2), s(7.0, 1.0));
        straddle.insert(AgentId::new(1, 3), s(7.0, 9.0));
        assert_eq!(
            select_survivors(&straddle),
            vec![AgentId::new(1, 1), AgentId::new(1, 3)]
        );
    }

    #[test]
    fn scripted_offspring_stay_in_range() {
        let (res, _) = run(&scripted_cfg(&["claude_gen1", "gpt4o_gen1", "claude_gen10"], 0.05, 4));
        for r in &res.records {
            for o in &r.offspring {
                let Backend::Scripted { program, origin } = &o.profile.backend else {
                    panic!("expected a scripted agent");
                };
                assert!((0.0..=1.0).contains(&program.initial_fraction));
                assert!(r.survivors.iter().any(|s| s.to_string() == *origin));
            }
        }
    }

    #[test]
    fn mock_runs_are_deterministic() {
        let cfg = ExperimentConfig {
            generations: 2,
            seed: 9,
            ..ExperimentConfig::default()
        };
        let (a, ea) = run(&cfg);
        let (b, eb) = run(&cfg);
        assert_eq!(a, b);
        assert_eq!(ea.events, eb.events);
    }

    #[test]
    fn config_validation_names_keys() {
        let mut cfg = ExperimentConfig::default();
        cfg.game.rounds = 13;
        assert!(cfg.validate().unwrap_err().to_string().contains("`rounds`"));
        let mut cfg = ExperimentConfig::default();
        cfg.game.donation_multiplier = 1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("donation_multiplier"));
        let cfg = scripted_cfg(&["init 200%"], 0.0, 1);
        assert!(cfg.validate().is_err());
    }
}
