//! Donor Game simulator for studying the cultural evolution of cooperation.
//!
//! Agents play repeated Donor Games: a donor gives up part of its resources
//! and the recipient receives a multiple of that. Donors see a short trace of
//! the recipient's recent behaviour. After each generation the better half of
//! the population survives and new agents build their strategies from the
//! survivors' advice.
//!
//! Module map:
//! - [`game`]: ledger, donations, punishment and traces
//! - [`scheduler`]: role-alternating pairings with unique ordered pairs
//! - [`agents`]: prompts, decision parsing and the agent backends
//! - [`dsl`]: strategy language for scripted agents
//! - [`evolution`]: the generational loop
//! - [`gateway`]: chat-completion access
//! - [`metrics`]: per-generation statistics
//! - [`persistence`]: configs, artifacts, resume, replay and analysis

pub mod agents;
pub mod dsl;
pub mod evolution;
pub mod game;
pub mod gateway;
pub mod metrics;
pub mod persistence;
pub mod scheduler;
pub mod seeds;
