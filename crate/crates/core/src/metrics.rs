//! Statistics over completed generations.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::evolution::GenerationRecord;
use crate::game::{init_game, AgentId, DonationEvent, GameConfig, GameError};
use crate::scheduler::{make_schedule, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("generation {0} is incomplete")]
    IncompleteGeneration(u32),
    #[error("at least 2 runs are needed for a standard error, got {0}")]
    TooFewRuns(usize),
    #[error("runs cover different numbers of generations")]
    RaggedSeries,
    #[error("punishment is disabled for this run")]
    PunishmentDisabled,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for x in xs {
        n += 1;
        sum += x;
    }
    (n > 0).then(|| sum / n as f64)
}

fn check_complete(record: &GenerationRecord) -> Result<(), MetricsError> {
    if record.scores.len() != record.population.len()
        || record.survivors.len() * 2 != record.population.len()
    {
        return Err(MetricsError::IncompleteGeneration(record.generation));
    }
    Ok(())
}

/// Per generation, the mean over agents of their mean-of-two-runs score.
pub fn average_final_resources(records: &[GenerationRecord]) -> Result<Vec<f64>, MetricsError> {
    records
        .iter()
        .map(|r| {
            check_complete(r)?;
            mean(r.scores.values().map(|s| s.mean))
                .ok_or(MetricsError::IncompleteGeneration(r.generation))
        })
        .collect()
}

/// Mean and standard error (sample sd over sqrt n) per position across runs.
pub fn sem_across_runs(series: &[Vec<f64>]) -> Result<Vec<(f64, f64)>, MetricsError> {
    let n = series.len();
    if n < 2 {
        return Err(MetricsError::TooFewRuns(n));
    }
    let len = series[0].len();
    if series.iter().any(|s| s.len() != len) {
        return Err(MetricsError::RaggedSeries);
    }
    Ok((0..len)
        .map(|g| {
            let m = series.iter().map(|s| s[g]).sum::<f64>() / n as f64;
            let var = series.iter().map(|s| (s[g] - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            (m, var.sqrt() / (n as f64).sqrt())
        })
        .collect())
}

/// Each agent's mean donation fraction over its donor turns in both runs.
pub fn agent_fractions(record: &GenerationRecord) -> BTreeMap<AgentId, f64> {
    let mut acc: BTreeMap<AgentId, (f64, usize)> = BTreeMap::new();
    for e in record.transcripts.iter().flatten() {
        let slot = acc.entry(e.donor).or_default();
        slot.0 += e.fraction;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(id, (sum, n))| (id, sum / n as f64))
        .collect()
}

/// Mean of successive differences; 0 for fewer than two points.
pub fn average_change(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    mean(series.windows(2).map(|w| w[1] - w[0])).unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DonationMatrix {
    pub generations: Vec<u32>,
    /// Every agent that ever played, in id order.
    pub agents: Vec<AgentId>,
    /// `cells[agent][generation]`; absent when the agent did not play.
    pub cells: BTreeMap<AgentId, BTreeMap<u32, f64>>,
    pub population_mean: Vec<f64>,
    pub average_change: f64,
}

pub fn donation_matrix(records: &[GenerationRecord]) -> DonationMatrix {
    let mut cells: BTreeMap<AgentId, BTreeMap<u32, f64>> = BTreeMap::new();
    let mut population_mean = Vec::with_capacity(records.len());
    for r in records {
        let fractions = agent_fractions(r);
        population_mean.push(mean(fractions.values().copied()).unwrap_or(0.0));
        for (id, f) in fractions {
            cells.entry(id).or_default().insert(r.generation, f);
        }
    }
    DonationMatrix {
        generations: records.iter().map(|r| r.generation).collect(),
        agents: cells.keys().copied().collect(),
        average_change: average_change(&population_mean),
        cells,
        population_mean,
    }
}

/// (survivor mean − non-survivor mean) / population mean, or 0 when the
/// population mean is 0.
pub fn survivor_differential_of(fractions: &BTreeMap<AgentId, f64>, survivors: &[AgentId]) -> f64 {
    let all = mean(fractions.values().copied()).unwrap_or(0.0);
    if all == 0.0 {
        return 0.0;
    }
    let (surv, rest): (Vec<_>, Vec<_>) = fractions
        .iter()
        .partition(|(id, _)| survivors.contains(id));
    let s = mean(surv.iter().map(|(_, f)| **f)).unwrap_or(0.0);
    let o = mean(rest.iter().map(|(_, f)| **f)).unwrap_or(0.0);
    (s - o) / all
}

pub fn survivor_differential(records: &[GenerationRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| survivor_differential_of(&agent_fractions(r), &r.survivors))
        .collect()
}

/// Share of encounters in which the donor punished.
pub fn punishment_frequency_of<'a>(
    events: impl IntoIterator<Item = &'a DonationEvent>,
    punishment_enabled: bool,
) -> Result<f64, MetricsError> {
    if !punishment_enabled {
        return Err(MetricsError::PunishmentDisabled);
    }
    let mut total = 0usize;
    let mut punished = 0usize;
    for e in events {
        total += 1;
        if e.punished() {
            punished += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { punished as f64 / total as f64 })
}

pub fn punishment_frequency(
    records: &[GenerationRecord],
    config: &GameConfig,
) -> Result<f64, MetricsError> {
    punishment_frequency_of(
        records.iter().flat_map(|r| r.transcripts.iter().flatten()),
        config.punishment_enabled,
    )
}

/// A fraction as a percentage with two decimals, e.g. `14.29%`.
pub fn format_percentage(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

/// Average final resources when everyone donates everything every round,
/// simulated on the engine.
pub fn max_average_resources(config: &GameConfig) -> Result<f64, MetricsError> {
    let config = GameConfig {
        punishment_enabled: false,
        ..config.clone()
    };
    config.validate_engine()?;
    let ids: Vec<AgentId> = (1..=config.population_size as u32)
        .map(|m| AgentId::new(1, m))
        .collect();
    let schedule = make_schedule(&ids, config.rounds, 0)?;
    let mut state = init_game(config, &ids)?;
    for matching in &schedule.rounds {
        for p in matching {
            let all = state.balance(p.donor)?;
            state.apply_donation(p.donor, p.recipient, all)?;
        }
        state.advance_round()?;
    }
    Ok(state.ledger.average())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub mean_final_resources: f64,
    pub mean_donation_fraction: f64,
    pub survivor_differential: f64,
    /// `None` when punishment is disabled.
    pub punishment_frequency: Option<f64>,
}

pub fn generation_stats(
    records: &[GenerationRecord],
    config: &GameConfig,
) -> Result<Vec<GenerationStats>, MetricsError> {
    let finals = average_final_resources(records)?;
    Ok(records
        .iter()
        .zip(finals)
        .map(|(r, mean_final_resources)| {
            let fractions = agent_fractions(r);
            GenerationStats {
                generation: r.generation,
                mean_final_resources,
                mean_donation_fraction: mean(fractions.values().copied()).unwrap_or(0.0),
                survivor_differential: survivor_differential_of(&fractions, &r.survivors),
                punishment_frequency: punishment_frequency_of(
                    r.transcripts.iter().flatten(),
                    config.punishment_enabled,
                )
                .ok(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(donor: AgentId, fraction: f64, spend: f64) -> DonationEvent {
        DonationEvent {
            round: 1,
            donor,
            recipient: AgentId::new(9, 9),
            amount: fraction * 10.0,
            donor_resources_before: 10.0,
            fraction,
            punishment_spend: spend,
        }
    }

    #[test]
    fn sem_oracles() {
        let r = sem_across_runs(&[vec![10.0], vec![20.0]]).unwrap();
        assert_eq!(r[0].0, 15.0);
        assert!((r[0].1 - 5.0).abs() < 1e-12);
        let same = sem_across_runs(&[vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(same, vec![(3.0, 0.0), (4.0, 0.0)]);
        assert_eq!(sem_across_runs(&[vec![1.0]]), Err(MetricsError::TooFewRuns(1)));
        assert_eq!(
            sem_across_runs(&[vec![1.0], vec![1.0, 2.0]]),
            Err(MetricsError::RaggedSeries)
        );
    }

    #[test]
    fn differential_oracles() {
        let ids: Vec<AgentId> = (1..=4).map(|m| AgentId::new(1, m)).collect();
        let f: BTreeMap<_, _> = ids.iter().copied().zip([0.6, 0.6, 0.4, 0.4]).collect();
        let d = survivor_differential_of(&f, &ids[..2]);
        assert!((d - 0.4).abs() < 1e-12);
        let scaled: BTreeMap<_, _> = f.iter().map(|(k, v)| (*k, v * 0.5)).collect();
        assert!((survivor_differential_of(&scaled, &ids[..2]) - d).abs() < 1e-12);
        let zero: BTreeMap<_, _> = ids.iter().map(|id| (*id, 0.0)).collect();
        assert_eq!(survivor_differential_of(&zero, &ids[..2]), 0.0);
        let same: BTreeMap<_, _> = ids.iter().map(|id| (*id, 0.3)).collect();
        assert_eq!(survivor_differential_of(&same, &ids[..2]), 0.0);
    }

    #[test]
    fn punishment_oracles() {
        let a = AgentId::new(1, 1);
        let mut events: Vec<_> = (0..7).map(|_| event(a, 0.5, 0.0)).collect();
        assert_eq!(punishment_frequency_of(&events, true).unwrap(), 0.0);
        events[3].punishment_spend = 1.0;
        let f = punishment_frequency_of(&events, true).unwrap();
        assert!((f - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(format_percentage(f), "14.29%");
        assert_eq!(
            punishment_frequency_of(&events, false),
            Err(MetricsError::PunishmentDisabled)
        );
        let all: Vec<_> = (0..3).map(|_| event(a, 0.1, 1.0)).collect();
        assert_eq!(punishment_frequency_of(&all, true).unwrap(), 1.0);
    }

    #[test]
    fn bounds() {
        assert_eq!(max_average_resources(&GameConfig::default()).unwrap(), 30720.0);
        let flat = GameConfig {
            donation_multiplier: 1.0,
            ..GameConfig::default()
        };
        assert_eq!(max_average_resources(&flat).unwrap(), 10.0);
        let triple = GameConfig {
            donation_multiplier: 3.0,
            ..GameConfig::default()
        };
        assert_eq!(max_average_resources(&triple).unwrap(), 3_542_940.0);
    }

    #[test]
    fn change_estimator() {
        assert_eq!(average_change(&[0.5, 0.5, 0.5]), 0.0);
        assert!((average_change(&[0.6, 0.5, 0.3]) + 0.15).abs() < 1e-12);
        assert_eq!(average_change(&[0.4]), 0.0);
    }
}
