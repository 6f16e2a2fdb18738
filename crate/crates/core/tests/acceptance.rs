//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so every line reaches the output; exits non-zero on any failure.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use donorsim::agents::{AgentProfile, AgentRuntime, Backend, DonationContext};
use donorsim::dsl::{corpus_load, corpus_program, evaluate, evaluate_punishment, EvalContext};
use donorsim::evolution::{
    run_experiment, select_survivors, BackendKind, Event, ExperimentConfig, MemoryRecorder, Score,
    ScriptedConfig,
};
use donorsim::game::{init_game, AgentId, DonationEvent, GameConfig, TraceEntry};
use donorsim::gateway::RequestSettings;
use donorsim::metrics::{
    average_final_resources, format_percentage, max_average_resources, punishment_frequency_of,
    sem_across_runs, survivor_differential_of,
};
use donorsim::persistence::{
    ablate, load_artifact, replay, resume_artifact, run_to_artifact, AblationSpec, RunOptions,
};
use donorsim::scheduler::{make_schedule, swap_roles};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ids(n: u32) -> Vec<AgentId> {
    (1..=n).map(|m| AgentId::new(1, m)).collect()
}

/// Average final resources when every donor gives everything: holders
/// double each round after the first, and half the population holds the
/// pot at the end.
fn bound_oracle(endowment: f64, multiplier: f64, rounds: i32) -> f64 {
    endowment * (multiplier + 1.0) * multiplier.powi(rounds - 1) / 2.0
}

fn scripted(programs: &[&str], generations: u32) -> ExperimentConfig {
    ExperimentConfig {
        generations,
        backend: BackendKind::Scripted,
        scripted: ScriptedConfig {
            programs: programs.iter().map(|s| s.to_string()).collect(),
            mutation: 0.0,
        },
        ..ExperimentConfig::default()
    }
}

fn play(cfg: &ExperimentConfig) -> Result<MemoryRecorder, String> {
    let rt = AgentRuntime::new(&cfg.game, None, RequestSettings::default(), cfg.seed);
    let mut rec = MemoryRecorder::default();
    run_experiment(cfg, &rt, &mut rec, Vec::new(), None).map_err(|e| e.to_string())?;
    Ok(rec)
}

fn upper_bound() -> Outcome {
    let start = Instant::now();
    let cfg = scripted(&["init 100%"], 1);
    let rec = play(&cfg)?;
    let avg = average_final_resources(&rec.records).map_err(|e| e.to_string())?[0];
    let elapsed = start.elapsed();
    let oracle = bound_oracle(10.0, 2.0, 12);
    ensure!(oracle == 30720.0, "closed form gives {oracle}");
    ensure!(avg == oracle, "average final resources {avg}, expected {oracle}");
    let engine = max_average_resources(&cfg.game).map_err(|e| e.to_string())?;
    ensure!(engine == oracle, "engine bound {engine}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("average {avg} in {elapsed:?}"))
}

/// Checks one trace against the transcript of the run it was shown in.
fn chain_consistent(
    trace: &[TraceEntry],
    recipient: AgentId,
    round: u32,
    history: &[(u32, AgentId, AgentId, f64)],
) -> Result<(), String> {
    let mut actor = recipient;
    for (k, e) in trace.iter().enumerate() {
        let r = round - 1 - k as u32;
        ensure!(e.round == r && e.actor == actor, "link {k} of round-{round} trace is out of order");
        let (_, _, to, fraction) = history
            .iter()
            .find(|h| h.0 == r && h.1 == actor)
            .ok_or_else(|| format!("no action by {actor} in round {r}"))?;
        ensure!(
            *to == e.actor_recipient && (fraction - e.fraction).abs() < 1e-12,
            "link {k} of round-{round} trace disagrees with the transcript"
        );
        actor = e.actor_recipient;
    }
    Ok(())
}

fn trace_schedule() -> Outcome {
    let cfg = ExperimentConfig {
        generations: 1,
        ..ExperimentConfig::default()
    };
    let rec = play(&cfg)?;
    let mut per_round: BTreeMap<(u8, u32), HashSet<usize>> = BTreeMap::new();
    let mut history: BTreeMap<u8, Vec<(u32, AgentId, AgentId, f64)>> = BTreeMap::new();
    let mut checked = 0;
    for ev in &rec.events {
        if let Event::Decision {
            run,
            round,
            donor,
            recipient,
            donor_resources,
            trace,
            donation,
            ..
        } = ev
        {
            per_round.entry((*run, *round)).or_default().insert(trace.len());
            let h = history.entry(*run).or_default();
            chain_consistent(trace, *recipient, *round, h)?;
            let fraction = if *donor_resources > 0.0 {
                donation / donor_resources
            } else {
                0.0
            };
            h.push((*round, *donor, *recipient, fraction));
            checked += 1;
        }
    }
    for run in 1..=2u8 {
        let lengths: Vec<usize> = (1..=12)
            .map(|r| {
                let s = &per_round[&(run, r)];
                if s.len() == 1 {
                    *s.iter().next().unwrap()
                } else {
                    usize::MAX
                }
            })
            .collect();
        ensure!(
            lengths == [0, 1, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3],
            "run {run} trace lengths {lengths:?}"
        );
    }
    Ok(format!("{checked} traces, lengths 0,1,2,3,3,...; chains consistent"))
}

fn scheduler_legality() -> Outcome {
    let start = Instant::now();
    let agents = ids(12);
    for seed in 0..1000u64 {
        let s = make_schedule(&agents, 12, seed).map_err(|e| e.to_string())?;
        let a: HashSet<AgentId> = s.group_a.iter().copied().collect();
        let b: HashSet<AgentId> = s.group_b.iter().copied().collect();
        ensure!(a.len() == 6 && b.len() == 6 && a.is_disjoint(&b), "seed {seed}: bad groups");
        let mut pairs = HashSet::new();
        for (i, m) in s.rounds.iter().enumerate() {
            let (donors, recipients) = if i % 2 == 0 { (&a, &b) } else { (&b, &a) };
            let mut seen = HashSet::new();
            for p in m {
                ensure!(donors.contains(&p.donor), "seed {seed}: roles do not alternate");
                ensure!(recipients.contains(&p.recipient), "seed {seed}: roles do not alternate");
                ensure!(seen.insert(p.donor) && seen.insert(p.recipient), "seed {seed}: not a matching");
                pairs.insert((p.donor, p.recipient));
            }
            ensure!(seen.len() == 12, "seed {seed} round {}: not perfect", i + 1);
        }
        ensure!(pairs.len() == 72, "seed {seed}: {} distinct ordered pairs", pairs.len());
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("1000 schedules in {elapsed:?}"))
}

/// Survivors by counting, for each agent, how many others beat it.
fn brute_force_survivors(scores: &BTreeMap<AgentId, Score>) -> Vec<AgentId> {
    let beats = |x: (&AgentId, &Score), y: (&AgentId, &Score)| {
        x.1.mean > y.1.mean
            || (x.1.mean == y.1.mean && x.1.run1 > y.1.run1)
            || (x.1.mean == y.1.mean && x.1.run1 == y.1.run1 && x.0 < y.0)
    };
    let mut ranked: Vec<(usize, AgentId)> = scores
        .iter()
        .map(|a| (scores.iter().filter(|b| beats(*b, a)).count(), *a.0))
        .collect();
    ranked.sort();
    ranked.into_iter().take(scores.len() / 2).map(|(_, id)| id).collect()
}

fn dual_run_selection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in 0..2000 {
        let scores: BTreeMap<AgentId, Score> = ids(12)
            .into_iter()
            .map(|id| {
                let run1 = rng.random_range(0..6) as f64 * 5.0;
                let run2 = rng.random_range(0..6) as f64 * 5.0;
                (id, Score { run1, run2, mean: (run1 + run2) / 2.0 })
            })
            .collect();
        let got = select_survivors(&scores);
        let want = brute_force_survivors(&scores);
        ensure!(got == want, "table {t}: {got:?} != {want:?}");
    }
    let agents = ids(12);
    for seed in 0..200u64 {
        let s = make_schedule(&agents, 12, seed).map_err(|e| e.to_string())?;
        let mut last: Vec<AgentId> = s.final_round_recipients();
        last.extend(swap_roles(&s).final_round_recipients());
        last.sort();
        ensure!(last == agents, "seed {seed}: final-round recipients {last:?}");
    }
    let rec = play(&ExperimentConfig {
        generations: 2,
        ..ExperimentConfig::default()
    })?;
    for r in &rec.records {
        ensure!(r.schedules[1] == swap_roles(&r.schedules[0]), "run 2 is not the role swap");
        for s in r.scores.values() {
            ensure!(s.mean == (s.run1 + s.run2) / 2.0, "score is not the mean of both runs");
        }
        ensure!(r.survivors == brute_force_survivors(&r.scores), "generation survivors differ");
    }
    Ok("2000 random tables agree with brute force; each agent a final-round recipient once".into())
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut events = 0;
    for game in 0..400 {
        let punishment = game % 2 == 1;
        let cfg = GameConfig {
            donation_multiplier: rng.random_range(1.0..4.0),
            punishment_enabled: punishment,
            punishment_multiplier: rng.random_range(0.0..3.0),
            ..GameConfig::default()
        };
        let m = cfg.donation_multiplier;
        let agents = ids(12);
        let schedule = make_schedule(&agents, 12, rng.random()).map_err(|e| e.to_string())?;
        let mut state = init_game(cfg, &agents).map_err(|e| e.to_string())?;
        for matching in &schedule.rounds {
            for p in matching {
                let have = state.balance(p.donor).unwrap();
                let amount = have * rng.random_range(0.0..=1.0);
                let before = state.ledger.total();
                state
                    .apply_donation(p.donor, p.recipient, amount)
                    .map_err(|e| e.to_string())?;
                let delta = state.ledger.total() - before;
                ensure!(
                    (delta - (m - 1.0) * amount).abs() <= 1e-9,
                    "donation delta {delta} vs {}",
                    (m - 1.0) * amount
                );
                events += 1;
                if punishment && rng.random_bool(0.4) {
                    let spend = state.balance(p.donor).unwrap() * rng.random_range(0.0..=1.0);
                    let before = state.ledger.total();
                    let removed = state
                        .apply_punishment(p.donor, p.recipient, spend)
                        .map_err(|e| e.to_string())?;
                    let delta = state.ledger.total() - before;
                    ensure!(
                        (delta + spend + removed).abs() <= 1e-9,
                        "punishment delta {delta} vs {}",
                        -(spend + removed)
                    );
                    events += 1;
                }
                ensure!(
                    state.ledger.iter().all(|(_, b)| b >= 0.0),
                    "negative balance in game {game}"
                );
            }
            state.advance_round().map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("{events} events across 400 games"))
}

fn dsl_replay() -> Outcome {
    let program = corpus_program("claude_gen1").map_err(|e| e.to_string())?;
    let fractions = [0.6, 0.5, 0.5];
    let trace: Vec<TraceEntry> = fractions
        .iter()
        .enumerate()
        .map(|(k, f)| TraceEntry {
            round: 3 - k as u32,
            actor: AgentId::new(1, k as u32 + 2),
            actor_recipient: AgentId::new(1, k as u32 + 3),
            fraction: *f,
            punished: false,
        })
        .collect();
    // Hand arithmetic: (0.6 + 0.5 + 0.5) / 3 = 1.6 / 3, times 74 units.
    let oracle_fraction: f64 = 1.6 / 3.0;
    let oracle_units: f64 = 74.0 * 1.6 / 3.0;
    ensure!((oracle_fraction - 0.5333).abs() < 1e-4 && (oracle_units - 39.47).abs() < 0.01, "oracle");
    let f = evaluate(
        &program,
        &EvalContext {
            round: 4,
            trace: &trace,
            donor_resources: 74.0,
            jitter_seed: 0,
        },
    );
    ensure!((f - oracle_fraction).abs() < 1e-9, "fraction {f}");
    let game = GameConfig::default();
    let donor = AgentProfile {
        id: AgentId::new(1, 1),
        strategy_text: program.to_string(),
        backend: Backend::Scripted {
            origin: "claude_gen1".into(),
            program: program.clone(),
        },
    };
    let rt = AgentRuntime::new(&game, None, RequestSettings::default(), 0);
    let d = rt
        .decide(&DonationContext {
            game: &game,
            donor: &donor,
            recipient: AgentId::new(1, 2),
            recipient_resources: 20.0,
            donor_resources: 74.0,
            round: 4,
            generation: 1,
            run: 1,
            trace: &trace,
            punishment_enabled: false,
        })
        .map_err(|e| e.to_string())?
        .decision;
    ensure!((d.donation - 39.47).abs() <= 0.01, "donation {}", d.donation);

    let corpus = corpus_load().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, p) in &corpus {
        let (lo, hi) = (p.caps.min, p.caps.max);
        for i in 0..10_000 {
            let len = rng.random_range(0..=3usize);
            let trace: Vec<TraceEntry> = (0..len)
                .map(|k| TraceEntry {
                    round: 10 - k as u32,
                    actor: AgentId::new(1, k as u32 + 1),
                    actor_recipient: AgentId::new(1, k as u32 + 2),
                    fraction: rng.random_range(0.0..=1.0),
                    punished: rng.random_bool(0.2),
                })
                .collect();
            let ctx = EvalContext {
                round: rng.random_range(1..=12),
                trace: &trace,
                donor_resources: rng.random_range(0.0..2000.0),
                jitter_seed: rng.random(),
            };
            let f = evaluate(p, &ctx);
            ensure!(
                (0.0..=1.0).contains(&f) && (lo - 1e-12..=hi + 1e-12).contains(&f),
                "{name} context {i}: fraction {f} outside [{lo}, {hi}]"
            );
            let s = evaluate_punishment(p, &ctx);
            ensure!((0.0..=1.0).contains(&s), "{name} context {i}: punishment share {s}");
        }
    }
    Ok(format!(
        "fraction {f:.4}, {:.2} of 74 units; {} corpus programs within caps",
        d.donation,
        corpus.len()
    ))
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let (fa, fb) = (files_under(a), files_under(b));
    ensure!(
        fa.keys().eq(fb.keys()),
        "file sets differ: {:?} vs {:?}",
        fa.keys().collect::<Vec<_>>(),
        fb.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &fa {
        ensure!(bytes == &fb[name], "{} differs", name.display());
    }
    Ok(())
}

fn golden_end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::default();
    let first = tmp.path().join("first");
    let start = Instant::now();
    run_to_artifact(&cfg, &first, RunOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let second = tmp.path().join("second");
    run_to_artifact(&cfg, &second, RunOptions::default()).map_err(|e| e.to_string())?;
    same_bytes(&first, &second).map_err(|e| format!("repeat: {e}"))?;

    let stopped = tmp.path().join("stopped");
    let options = RunOptions {
        stop_after: Some(4),
        ..RunOptions::default()
    };
    let s = run_to_artifact(&cfg, &stopped, options).map_err(|e| e.to_string())?;
    ensure!(s.completed == 4 && !s.complete, "stop_after left {} generations", s.completed);
    resume_artifact(&stopped, None, RunOptions::default()).map_err(|e| e.to_string())?;
    same_bytes(&first, &stopped).map_err(|e| format!("resume: {e}"))?;

    // A crash in the middle of generation 6: part of its events and a torn
    // last line are on disk, its record is not.
    let crashed = tmp.path().join("crashed");
    let options = RunOptions {
        stop_after: Some(5),
        ..RunOptions::default()
    };
    run_to_artifact(&cfg, &crashed, options).map_err(|e| e.to_string())?;
    let full_events = fs::read_to_string(first.join("events.jsonl")).unwrap();
    let cut_events = fs::read_to_string(crashed.join("events.jsonl")).unwrap();
    let extra: String = full_events[cut_events.len()..].lines().take(40).map(|l| format!("{l}\n")).collect();
    let torn = &full_events[cut_events.len() + extra.len()..][..25];
    fs::write(crashed.join("events.jsonl"), format!("{cut_events}{extra}{torn}")).unwrap();
    resume_artifact(&crashed, None, RunOptions::default()).map_err(|e| e.to_string())?;
    same_bytes(&first, &crashed).map_err(|e| format!("crash resume: {e}"))?;

    let report = replay(&first).map_err(|e| e.to_string())?;
    ensure!(report.verified(), "divergence: {}", report.divergence.unwrap());
    ensure!(
        report.generations == 10 && report.decisions == 10 * 2 * 12 * 6,
        "replay covered {} generations, {} decisions",
        report.generations,
        report.decisions
    );
    ensure!(elapsed < Duration::from_secs(30), "run took {elapsed:?}");
    Ok(format!(
        "identical across repeat, resume and crash resume; 0 divergences; run {elapsed:?}"
    ))
}

fn metrics_oracles() -> Outcome {
    let sem = sem_across_runs(&[vec![10.0], vec![20.0]]).map_err(|e| e.to_string())?;
    // Sample sd of {10, 20} is sqrt(50); over sqrt(2) that is 5.
    ensure!((sem[0].0 - 15.0).abs() < 1e-12 && (sem[0].1 - 5.0).abs() < 1e-12, "sem {sem:?}");

    let fractions: BTreeMap<AgentId, f64> = [(1, 0.6), (2, 0.6), (3, 0.4), (4, 0.4)]
        .into_iter()
        .map(|(m, f)| (AgentId::new(1, m), f))
        .collect();
    let survivors = [AgentId::new(1, 1), AgentId::new(1, 2)];
    let diff = survivor_differential_of(&fractions, &survivors);
    // (0.6 - 0.4) / 0.5
    ensure!((diff - 0.4).abs() < 1e-12, "differential {diff}");

    let events: Vec<DonationEvent> = (0..7)
        .map(|i| DonationEvent {
            round: 1,
            donor: AgentId::new(1, i + 1),
            recipient: AgentId::new(1, i + 2),
            amount: 1.0,
            donor_resources_before: 10.0,
            fraction: 0.1,
            punishment_spend: if i == 3 { 1.0 } else { 0.0 },
        })
        .collect();
    let freq = punishment_frequency_of(&events, true).map_err(|e| e.to_string())?;
    ensure!(format_percentage(freq) == "14.29%", "frequency {}", format_percentage(freq));

    let flat = GameConfig {
        donation_multiplier: 1.0,
        ..GameConfig::default()
    };
    let bound = max_average_resources(&flat).map_err(|e| e.to_string())?;
    ensure!(bound == bound_oracle(10.0, 1.0, 12) && bound == 10.0, "multiplier-1 bound {bound}");
    Ok(format!("sem 5, differential 0.4, {}, bound {bound}", format_percentage(freq)))
}

fn differing_keys(a: &toml::Table, b: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    let keys: HashSet<&String> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let path = format!("{prefix}{k}");
        match (a.get(k), b.get(k)) {
            (Some(toml::Value::Table(x)), Some(toml::Value::Table(y))) => {
                differing_keys(x, y, &format!("{path}."), out)
            }
            (x, y) if x != y => out.push(path),
            _ => {}
        }
    }
}

fn sweep(root: &Path, base: &Path, spec: &str, key: &str) -> Result<usize, String> {
    let spec: AblationSpec = spec.parse().map_err(|e: donorsim::persistence::PersistError| e.to_string())?;
    let runs = ablate(base, &spec, Some(root), RunOptions::default).map_err(|e| e.to_string())?;
    ensure!(runs.len() == 3, "{} artifacts", runs.len());
    let tables: Vec<toml::Table> = runs
        .iter()
        .map(|r| {
            let a = load_artifact(&r.dir).map_err(|e| e.to_string())?;
            ensure!(r.complete && a.records.len() == 2, "{} is incomplete", r.dir.display());
            let rep = replay(&r.dir).map_err(|e| e.to_string())?;
            ensure!(rep.verified(), "{} does not replay", r.dir.display());
            toml::from_str(&a.snapshot).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    for t in &tables[1..] {
        let mut diff = Vec::new();
        differing_keys(&tables[0], t, "", &mut diff);
        ensure!(diff == [key], "configs differ in {diff:?}");
    }
    Ok(runs.len())
}

fn ablation_plumbing() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = tmp.path().join("base.toml");
    fs::write(&base, "generations = 2\nbackend = \"mock\"\n").unwrap();
    let a = sweep(&tmp.path().join("m"), &base, "multiplier=1.5,2,3", "donation_multiplier")?;
    let b = sweep(&tmp.path().join("t"), &base, "trace_depth=1,2,3", "trace_depth")?;
    Ok(format!("{a} + {b} artifacts, each differing only in the swept key"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("upper-bound oracle", upper_bound),
        ("trace schedule", trace_schedule),
        ("scheduler legality", scheduler_legality),
        ("dual-run selection", dual_run_selection),
        ("conservation suite", conservation),
        ("DSL replay", dsl_replay),
        ("golden end-to-end", golden_end_to_end),
        ("metrics oracles", metrics_oracles),
        ("ablation plumbing", ablation_plumbing),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check)
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
