//! Donor Game state machine.
//!
//! A [`GameState`] tracks one game run: the resource ledger, the current
//! round, and every donation (with any punishment attached to it). Traces,
//! the reputation information shown to donors, are derived from the
//! history by [`build_trace`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of an agent: the generation it was created in and its index
/// within that cohort. Rendered as `G_M`, e.g. `2_4`.
///
/// Ordering is by `(generation, member)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId {
    pub generation: u32,
    pub member: u32,
}

impl AgentId {
    pub fn new(generation: u32, member: u32) -> Self {
        Self { generation, member }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.generation, self.member)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid agent id {0:?}: expected `G_M` with positive integers")]
pub struct ParseAgentIdError(String);

impl FromStr for AgentId {
    type Err = ParseAgentIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAgentIdError(s.to_string());
        let (g, m) = s.split_once('_').ok_or_else(err)?;
        let generation: u32 = g.parse().map_err(|_| err())?;
        let member: u32 = m.parse().map_err(|_| err())?;
        if generation == 0 || member == 0 {
            return Err(err());
        }
        Ok(Self { generation, member })
    }
}

impl Serialize for AgentId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-agent holdings of the resource within one game run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ResourceLedger {
    balances: BTreeMap<AgentId, f64>,
}

impl ResourceLedger {
    pub fn get(&self, id: AgentId) -> Option<f64> {
        self.balances.get(&id).copied()
    }

    pub fn total(&self) -> f64 {
        self.balances.values().sum()
    }

    pub fn len(&self) -> usize {
        self.balances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balances.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, f64)> + '_ {
        self.balances.iter().map(|(id, v)| (*id, *v))
    }

    pub fn average(&self) -> f64 {
        if self.balances.is_empty() {
            0.0
        } else {
            self.total() / self.balances.len() as f64
        }
    }

    fn balance_mut(&mut self, id: AgentId) -> Result<&mut f64, GameError> {
        self.balances.get_mut(&id).ok_or(GameError::UnknownAgent(id))
    }
}

impl FromIterator<(AgentId, f64)> for ResourceLedger {
    fn from_iter<T: IntoIterator<Item = (AgentId, f64)>>(iter: T) -> Self {
        Self {
            balances: iter.into_iter().collect(),
        }
    }
}

/// One donor action, including any punishment the donor inflicted on the
/// same recipient in the same encounter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonationEvent {
    pub round: u32,
    pub donor: AgentId,
    pub recipient: AgentId,
    pub amount: f64,
    pub donor_resources_before: f64,
    /// `amount / donor_resources_before`, or 0 when the donor had nothing.
    pub fraction: f64,
    #[serde(default)]
    pub punishment_spend: f64,
}

impl DonationEvent {
    pub fn punished(&self) -> bool {
        self.punishment_spend > 0.0
    }
}

/// Donation fraction against the donor's holdings before the donation.
pub fn donation_fraction(amount: f64, donor_resources_before: f64) -> f64 {
    if donor_resources_before > 0.0 {
        (amount / donor_resources_before).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// One link of the reputation chain shown to a donor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: u32,
    pub actor: AgentId,
    pub actor_recipient: AgentId,
    pub fraction: f64,
    #[serde(default)]
    pub punished: bool,
}

/// Most recent entry first; rounds are consecutive and decreasing.
pub type Trace = Vec<TraceEntry>;

/// Protocol parameters of a single game run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub population_size: usize,
    pub rounds: u32,
    pub endowment: f64,
    pub donation_multiplier: f64,
    pub trace_depth: u32,
    pub punishment_enabled: bool,
    pub punishment_multiplier: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            population_size: 12,
            rounds: 12,
            endowment: 10.0,
            donation_multiplier: 2.0,
            trace_depth: 3,
            punishment_enabled: false,
            punishment_multiplier: 2.0,
        }
    }
}

impl GameConfig {
    /// Full experiment-level validation.
    pub fn validate(&self) -> Result<(), GameError> {
        self.validate_engine()?;
        if !(self.donation_multiplier > 1.0) {
            return Err(GameError::InvalidConfig {
                key: "donation_multiplier",
                reason: "must be greater than 1".into(),
            });
        }
        Ok(())
    }

    /// The weaker check the engine needs to run at all. Allows a multiplier of
    /// exactly 1 so zero-sum bounds can be simulated.
    pub fn validate_engine(&self) -> Result<(), GameError> {
        let invalid = |key, reason: &str| {
            Err(GameError::InvalidConfig {
                key,
                reason: reason.to_string(),
            })
        };
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return invalid("population_size", "must be even and at least 4");
        }
        if self.rounds < 1 {
            return invalid("rounds", "must be at least 1");
        }
        if !(self.endowment.is_finite() && self.endowment >= 0.0) {
            return invalid("endowment", "must be a finite non-negative number");
        }
        if !(self.donation_multiplier.is_finite() && self.donation_multiplier >= 1.0) {
            return invalid("donation_multiplier", "must be a finite number of at least 1");
        }
        if !(self.punishment_multiplier.is_finite() && self.punishment_multiplier >= 0.0) {
            return invalid("punishment_multiplier", "must be a finite non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("population mismatch: expected {expected} agents, got {actual}")]
    PopulationMismatch { expected: usize, actual: usize },
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} cannot donate to itself")]
    SelfDonation(AgentId),
    #[error("amount must be a finite non-negative number, got {0}")]
    NegativeAmount(f64),
    #[error("{agent} holds {balance} but tried to spend {amount}")]
    ExceedsBalance {
        agent: AgentId,
        amount: f64,
        balance: f64,
    },
    #[error("punishment is disabled in this game")]
    PunishmentDisabled,
    #[error("no donation from {punisher} to {target} in round {round} to attach punishment to")]
    NoEncounter {
        punisher: AgentId,
        target: AgentId,
        round: u32,
    },
    #[error("{0} already acted as donor in round {1}")]
    AlreadyActed(AgentId, u32),
    #[error("round {round} has {actual} donations, expected {expected}")]
    RoundIncomplete {
        round: u32,
        expected: usize,
        actual: usize,
    },
    #[error("game is over after round {0}")]
    GameOver(u32),
    #[error("history has no donation by {actor} in round {round}")]
    MissingHistory { actor: AgentId, round: u32 },
}

/// Slack for float comparisons against balances.
const BALANCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub config: GameConfig,
    /// Round currently being played; `rounds + 1` once the game is over.
    pub round: u32,
    pub ledger: ResourceLedger,
    pub history: Vec<DonationEvent>,
}

/// Starts a game run with every agent holding the endowment.
pub fn init_game(config: GameConfig, agents: &[AgentId]) -> Result<GameState, GameError> {
    config.validate_engine()?;
    if agents.len() != config.population_size {
        return Err(GameError::PopulationMismatch {
            expected: config.population_size,
            actual: agents.len(),
        });
    }
    let mut balances = BTreeMap::new();
    for &id in agents {
        if balances.insert(id, config.endowment).is_some() {
            return Err(GameError::DuplicateAgent(id));
        }
    }
    Ok(GameState {
        config,
        round: 1,
        ledger: ResourceLedger { balances },
        history: Vec::new(),
    })
}

impl GameState {
    pub fn is_over(&self) -> bool {
        self.round > self.config.rounds
    }

    pub fn balance(&self, id: AgentId) -> Result<f64, GameError> {
        self.ledger.get(id).ok_or(GameError::UnknownAgent(id))
    }

    fn current_round_events(&self) -> impl Iterator<Item = &DonationEvent> {
        let round = self.round;
        self.history.iter().rev().take_while(move |e| e.round == round)
    }

    /// Donor gives `amount`; the recipient receives `donation_multiplier`
    /// times that. Fails without changing the state.
    pub fn apply_donation(
        &mut self,
        donor: AgentId,
        recipient: AgentId,
        amount: f64,
    ) -> Result<&DonationEvent, GameError> {
        if self.is_over() {
            return Err(GameError::GameOver(self.config.rounds));
        }
        if donor == recipient {
            return Err(GameError::SelfDonation(donor));
        }
        if !(amount.is_finite() && amount >= 0.0) {
            return Err(GameError::NegativeAmount(amount));
        }
        let before = self.balance(donor)?;
        self.balance(recipient)?;
        if amount > before + BALANCE_EPS {
            return Err(GameError::ExceedsBalance {
                agent: donor,
                amount,
                balance: before,
            });
        }
        if self.current_round_events().any(|e| e.donor == donor) {
            return Err(GameError::AlreadyActed(donor, self.round));
        }
        let amount = amount.min(before);
        let multiplier = self.config.donation_multiplier;
        *self.ledger.balance_mut(donor)? = before - amount;
        *self.ledger.balance_mut(recipient)? += multiplier * amount;
        self.history.push(DonationEvent {
            round: self.round,
            donor,
            recipient,
            amount,
            donor_resources_before: before,
            fraction: donation_fraction(amount, before),
            punishment_spend: 0.0,
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Punisher spends `spend` to remove `punishment_multiplier * spend` from
    /// the target, clamped at the target's balance. Must follow the
    /// punisher's donation to the same target in the current round. Returns
    /// the amount actually removed from the target.
    pub fn apply_punishment(
        &mut self,
        punisher: AgentId,
        target: AgentId,
        spend: f64,
    ) -> Result<f64, GameError> {
        if !self.config.punishment_enabled {
            return Err(GameError::PunishmentDisabled);
        }
        if !(spend.is_finite() && spend >= 0.0) {
            return Err(GameError::NegativeAmount(spend));
        }
        let round = self.round;
        let idx = self
            .history
            .iter()
            .rposition(|e| e.round == round && e.donor == punisher && e.recipient == target)
            .ok_or(GameError::NoEncounter {
                punisher,
                target,
                round,
            })?;
        let available = self.balance(punisher)?;
        if spend > available + BALANCE_EPS {
            return Err(GameError::ExceedsBalance {
                agent: punisher,
                amount: spend,
                balance: available,
            });
        }
        let spend = spend.min(available);
        let target_before = self.balance(target)?;
        let removed = (self.config.punishment_multiplier * spend).min(target_before);
        *self.ledger.balance_mut(punisher)? = available - spend;
        *self.ledger.balance_mut(target)? = target_before - removed;
        self.history[idx].punishment_spend += spend;
        Ok(removed)
    }

    /// Closes the current round once every donor has acted.
    pub fn advance_round(&mut self) -> Result<(), GameError> {
        if self.is_over() {
            return Err(GameError::GameOver(self.config.rounds));
        }
        let expected = self.config.population_size / 2;
        let actual = self.current_round_events().count();
        if actual != expected {
            return Err(GameError::RoundIncomplete {
                round: self.round,
                expected,
                actual,
            });
        }
        self.round += 1;
        Ok(())
    }

    pub fn trace_for(&self, recipient: AgentId) -> Result<Trace, GameError> {
        build_trace(
            &self.history,
            recipient,
            self.round,
            self.config.trace_depth,
        )
    }
}

/// Follows the chain of donor actions backwards from `recipient`: its own
/// donation in the previous round, then what its partner did the round
/// before that, and so on, for at most `trace_depth` links.
pub fn build_trace(
    history: &[DonationEvent],
    recipient: AgentId,
    current_round: u32,
    trace_depth: u32,
) -> Result<Trace, GameError> {
    let len = current_round.saturating_sub(1).min(trace_depth);
    let mut trace = Vec::with_capacity(len as usize);
    let mut actor = recipient;
    for k in 0..len {
        let round = current_round - 1 - k;
        let event = history
            .iter()
            .find(|e| e.round == round && e.donor == actor)
            .ok_or(GameError::MissingHistory { actor, round })?;
        trace.push(TraceEntry {
            round,
            actor,
            actor_recipient: event.recipient,
            fraction: event.fraction,
            punished: event.punished(),
        });
        actor = event.recipient;
    }
    Ok(trace)
}
