//! Pairing schedules for one game run.
//!
//! Roles alternate strictly, so a run splits the population into two fixed
//! groups: group A donates in odd rounds, group B in even rounds. Matchings
//! between the groups come from cyclic Latin squares: with `h` agents per
//! group, shift `k` pairs `a_i` with `b_{(i+k) mod h}`. Each orientation has
//! `h` distinct shifts, so at most `2h` rounds fit before an ordered
//! (donor, recipient) pair would repeat.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub donor: AgentId,
    pub recipient: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// `rounds[r]` holds the matching for round `r + 1`.
    pub rounds: Vec<Vec<Pairing>>,
    /// Donors in odd rounds.
    pub group_a: Vec<AgentId>,
    /// Donors in even rounds.
    pub group_b: Vec<AgentId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("population of {0} cannot be split into donor/recipient pairs")]
    OddPopulation(usize),
    #[error("at least 2 agents are needed, got {0}")]
    TooFewAgents(usize),
    #[error("{rounds} rounds exceed the {capacity} that keep ordered pairs unique")]
    CapacityExceeded { rounds: u32, capacity: u32 },
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
}

/// Largest round count for which no ordered pair repeats.
pub fn round_capacity(population: usize) -> u32 {
    population as u32
}

pub fn make_schedule(
    agent_ids: &[AgentId],
    rounds: u32,
    seed: u64,
) -> Result<Schedule, ScheduleError> {
    let n = agent_ids.len();
    if !n.is_multiple_of(2) {
        return Err(ScheduleError::OddPopulation(n));
    }
    if n < 2 {
        return Err(ScheduleError::TooFewAgents(n));
    }
    let mut seen = HashSet::with_capacity(n);
    for id in agent_ids {
        if !seen.insert(*id) {
            return Err(ScheduleError::DuplicateAgent(*id));
        }
    }
    let capacity = round_capacity(n);
    if rounds > capacity {
        return Err(ScheduleError::CapacityExceeded { rounds, capacity });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = agent_ids.to_vec();
    shuffled.shuffle(&mut rng);
    let half = n / 2;
    let group_b = shuffled.split_off(half);
    let group_a = shuffled;

    // Independent shift orders for the two orientations.
    let mut forward: Vec<usize> = (0..half).collect();
    let mut backward: Vec<usize> = (0..half).collect();
    forward.shuffle(&mut rng);
    backward.shuffle(&mut rng);

    let matchings = (1..=rounds)
        .map(|round| {
            let slot = ((round - 1) / 2) as usize;
            if round % 2 == 1 {
                let shift = forward[slot];
                (0..half)
                    .map(|i| Pairing {
                        donor: group_a[i],
                        recipient: group_b[(i + shift) % half],
                    })
                    .collect()
            } else {
                let shift = backward[slot];
                (0..half)
                    .map(|i| Pairing {
                        donor: group_b[i],
                        recipient: group_a[(i + shift) % half],
                    })
                    .collect()
            }
        })
        .collect();

    Ok(Schedule {
        rounds: matchings,
        group_a,
        group_b,
    })
}

/// Reverses every pairing and exchanges the role groups.
pub fn swap_roles(schedule: &Schedule) -> Schedule {
    Schedule {
        rounds: schedule
            .rounds
            .iter()
            .map(|m| {
                m.iter()
                    .map(|p| Pairing {
                        donor: p.recipient,
                        recipient: p.donor,
                    })
                    .collect()
            })
            .collect(),
        group_a: schedule.group_b.clone(),
        group_b: schedule.group_a.clone(),
    }
}

impl Schedule {
    pub fn final_round_recipients(&self) -> Vec<AgentId> {
        self.rounds
            .last()
            .map(|m| m.iter().map(|p| p.recipient).collect())
            .unwrap_or_default()
    }

    /// Checks the matching, alternation and ordered-pair invariants.
    pub fn check(&self) -> Result<(), String> {
        let population: HashSet<AgentId> =
            self.group_a.iter().chain(&self.group_b).copied().collect();
        if population.len() != self.group_a.len() + self.group_b.len() {
            return Err("role groups overlap".into());
        }
        let mut pairs = HashSet::new();
        for (idx, matching) in self.rounds.iter().enumerate() {
            let round = idx + 1;
            let donors: &[AgentId] = if round % 2 == 1 {
                &self.group_a
            } else {
                &self.group_b
            };
            let mut present = HashSet::new();
            for p in matching {
                if !donors.contains(&p.donor) {
                    return Err(format!("round {round}: {} donates out of turn", p.donor));
                }
                if !present.insert(p.donor) || !present.insert(p.recipient) {
                    return Err(format!("round {round}: agent appears twice"));
                }
                if !pairs.insert((p.donor, p.recipient)) {
                    return Err(format!(
                        "round {round}: pair ({}, {}) repeats",
                        p.donor, p.recipient
                    ));
                }
            }
            if present != population {
                return Err(format!("round {round}: not a perfect matching"));
            }
        }
        Ok(())
    }
}
