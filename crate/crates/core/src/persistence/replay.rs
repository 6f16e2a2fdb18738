use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::artifact::load_artifact;
use super::PersistError;
use crate::evolution::{select_survivors, Event, GenerationRecord};
use crate::game::{init_game, AgentId, GameConfig, GameState, ResourceLedger};

/// Where a replay first disagreed with the artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub generation: u32,
    pub run: Option<u8>,
    pub round: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "generation {}", self.generation)?;
        if let Some(r) = self.run {
            write!(f, ", run {r}")?;
        }
        if let Some(r) = self.round {
            write!(f, ", round {r}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub generations: u32,
    pub decisions: usize,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn verified(&self) -> bool {
        self.divergence.is_none()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn ledgers_match(a: &ResourceLedger, b: &ResourceLedger) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("ledger has {} agents, expected {}", b.len(), a.len()));
    }
    for (id, x) in a.iter() {
        match b.get(id) {
            Some(y) if close(x, y) => {}
            Some(y) => return Err(format!("balance of {id} is {y}, engine says {x}")),
            None => return Err(format!("ledger lacks {id}")),
        }
    }
    Ok(())
}

struct Replayer<'a> {
    record: &'a GenerationRecord,
    run: u8,
    state: GameState,
    /// Position within the current round's matching.
    slot: usize,
    decisions: usize,
}

impl<'a> Replayer<'a> {
    fn new(game: &GameConfig, record: &'a GenerationRecord, run: u8) -> Result<Self, String> {
        let ids: Vec<AgentId> = record.population.iter().map(|p| p.id).collect();
        let state = init_game(game.clone(), &ids).map_err(|e| e.to_string())?;
        Ok(Self {
            record,
            run,
            state,
            slot: 0,
            decisions: 0,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn decision(
        &mut self,
        round: u32,
        donor: AgentId,
        recipient: AgentId,
        donor_resources: f64,
        recipient_resources: f64,
        trace: &[crate::game::TraceEntry],
        donation: f64,
        spend: f64,
    ) -> Result<(), String> {
        if round != self.state.round {
            return Err(format!("decision for round {round} while the engine is in round {}", self.state.round));
        }
        let schedule = &self.record.schedules[self.run as usize - 1];
        let expected = schedule
            .rounds
            .get(round as usize - 1)
            .and_then(|m| m.get(self.slot))
            .ok_or("more decisions than the schedule allows")?;
        if (expected.donor, expected.recipient) != (donor, recipient) {
            return Err(format!(
                "pairing {donor} -> {recipient}, schedule says {} -> {}",
                expected.donor, expected.recipient
            ));
        }
        let have = self.state.balance(donor).map_err(|e| e.to_string())?;
        if !close(have, donor_resources) {
            return Err(format!("donor {donor} recorded with {donor_resources}, engine has {have}"));
        }
        let have = self.state.balance(recipient).map_err(|e| e.to_string())?;
        if !close(have, recipient_resources) {
            return Err(format!(
                "recipient {recipient} recorded with {recipient_resources}, engine has {have}"
            ));
        }
        let engine_trace = self.state.trace_for(recipient).map_err(|e| e.to_string())?;
        let same_trace = engine_trace.len() == trace.len()
            && engine_trace.iter().zip(trace).all(|(a, b)| {
                a.round == b.round
                    && a.actor == b.actor
                    && a.actor_recipient == b.actor_recipient
                    && close(a.fraction, b.fraction)
                    && a.punished == b.punished
            });
        if !same_trace {
            return Err(format!("trace shown to {donor} differs from the engine's"));
        }
        self.state
            .apply_donation(donor, recipient, donation)
            .map_err(|e| e.to_string())?;
        if spend > 0.0 {
            self.state
                .apply_punishment(donor, recipient, spend)
                .map_err(|e| e.to_string())?;
        }
        self.slot += 1;
        self.decisions += 1;
        Ok(())
    }

    fn round_end(&mut self, round: u32, balances: &ResourceLedger) -> Result<(), String> {
        if round != self.state.round {
            return Err(format!("round end for {round} while the engine is in round {}", self.state.round));
        }
        self.state.advance_round().map_err(|e| e.to_string())?;
        self.slot = 0;
        ledgers_match(&self.state.ledger, balances)
    }

    fn finish(&self, balances: &ResourceLedger) -> Result<(), String> {
        if !self.state.is_over() {
            return Err(format!("run ended in round {}", self.state.round));
        }
        ledgers_match(&self.state.ledger, balances)?;
        let transcript = &self.record.transcripts[self.run as usize - 1];
        if transcript.len() != self.state.history.len() {
            return Err("recorded transcript length differs".into());
        }
        for (a, b) in self.state.history.iter().zip(transcript) {
            let same = a.round == b.round
                && a.donor == b.donor
                && a.recipient == b.recipient
                && close(a.amount, b.amount)
                && close(a.donor_resources_before, b.donor_resources_before)
                && close(a.fraction, b.fraction)
                && close(a.punishment_spend, b.punishment_spend);
            if !same {
                return Err(format!(
                    "transcript event round {} {} -> {} differs",
                    b.round, b.donor, b.recipient
                ));
            }
        }
        for (id, score) in &self.record.scores {
            let recorded = if self.run == 1 { score.run1 } else { score.run2 };
            let have = self.state.ledger.get(*id).unwrap_or(f64::NAN);
            if !close(have, recorded) {
                return Err(format!("score of {id} is {recorded}, engine says {have}"));
            }
        }
        Ok(())
    }
}

fn check_selection(record: &GenerationRecord) -> Result<(), String> {
    for s in record.scores.values() {
        if !close(s.mean, (s.run1 + s.run2) / 2.0) {
            return Err("a mean score is not the mean of its runs".into());
        }
    }
    if select_survivors(&record.scores) != record.survivors {
        return Err("survivor set does not follow from the scores".into());
    }
    Ok(())
}

/// Re-executes every recorded decision on the engine and compares traces,
/// balances, transcripts, scores and survivors with what the artifact says.
pub fn replay(dir: &Path) -> Result<ReplayReport, PersistError> {
    let artifact = load_artifact(dir)?;
    let game = &artifact.config.game;
    let mut decisions = 0;
    let mut active: Option<Replayer<'_>> = None;
    let diverge = |generation, run, round, detail: String| Divergence {
        generation,
        run,
        round,
        detail,
    };
    let record_for = |g: u32| artifact.records.get(g as usize - 1);
    let mut ended = 0u32;
    for event in &artifact.events {
        let step: Result<(), Divergence> = match event {
            Event::RunStart {
                generation,
                run,
                balances,
            } => match record_for(*generation) {
                None => {
                    break;
                }
                Some(record) => Replayer::new(game, record, *run)
                    .and_then(|r| {
                        ledgers_match(&r.state.ledger, balances)?;
                        active = Some(r);
                        Ok(())
                    })
                    .map_err(|d| diverge(*generation, Some(*run), None, d)),
            },
            Event::Decision {
                generation,
                run,
                round,
                donor,
                recipient,
                donor_resources,
                recipient_resources,
                trace,
                donation,
                punishment_spend,
                ..
            } => match active.as_mut() {
                Some(r) if r.record.generation == *generation && r.run == *run => r
                    .decision(
                        *round,
                        *donor,
                        *recipient,
                        *donor_resources,
                        *recipient_resources,
                        trace,
                        *donation,
                        *punishment_spend,
                    )
                    .map_err(|d| diverge(*generation, Some(*run), Some(*round), d)),
                _ => Err(diverge(*generation, Some(*run), Some(*round), "decision outside a run".into())),
            },
            Event::RoundEnd {
                generation,
                run,
                round,
                balances,
            } => match active.as_mut() {
                Some(r) => r
                    .round_end(*round, balances)
                    .map_err(|d| diverge(*generation, Some(*run), Some(*round), d)),
                None => Err(diverge(*generation, Some(*run), Some(*round), "round end outside a run".into())),
            },
            Event::RunEnd {
                generation,
                run,
                balances,
            } => match active.take() {
                Some(r) => {
                    decisions += r.decisions;
                    r.finish(balances)
                        .map_err(|d| diverge(*generation, Some(*run), None, d))
                }
                None => Err(diverge(*generation, Some(*run), None, "run end outside a run".into())),
            },
            Event::Survivors {
                generation,
                survivors,
            } => match record_for(*generation) {
                Some(record) if &record.survivors == survivors => {
                    check_selection(record).map_err(|d| diverge(*generation, None, None, d))
                }
                Some(_) => Err(diverge(*generation, None, None, "survivor event differs from the record".into())),
                None => break,
            },
            Event::GenerationEnd { generation } => {
                ended = *generation;
                Ok(())
            }
            Event::GenerationStart { .. } | Event::StrategyElicited { .. } => Ok(()),
        };
        if let Err(d) = step {
            return Ok(ReplayReport {
                generations: ended,
                decisions,
                divergence: Some(d),
            });
        }
    }
    let divergence = (ended as usize != artifact.records.len()).then(|| {
        diverge(
            ended + 1,
            None,
            None,
            format!(
                "event stream covers {ended} generations but {} are recorded",
                artifact.records.len()
            ),
        )
    });
    Ok(ReplayReport {
        generations: ended,
        decisions,
        divergence,
    })
}
