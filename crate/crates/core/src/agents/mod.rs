//! Agents: prompt assembly, decision backends and response parsing.
//!
//! Three backends share one interface. `llm` agents receive rendered prompts
//! through the [`Gateway`](crate::gateway::Gateway); `mock` agents answer the
//! same prompts with canned text from a seeded persona; `scripted` agents run
//! a [`StrategyProgram`] and never touch text.

mod mock;
mod parse;
pub mod prompts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{evaluate, evaluate_punishment, EvalContext, StrategyProgram};
use crate::game::{AgentId, GameConfig, TraceEntry};
use crate::gateway::{
    CompletionRequest, Gateway, GatewayError, Purpose, RequestContext, RequestSettings,
};
use crate::seeds::{derive_seed, Stream};

pub use mock::MockPersona;
pub use parse::{extract_strategy, parse_decision};
pub use prompts::{
    render_donation_prompt, render_strategy_prompt, render_system_prompt, PromptError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Llm,
    Scripted {
        /// Corpus name, `inline`, or the parent's id for offspring.
        origin: String,
        #[serde(with = "program_source")]
        program: StrategyProgram,
    },
    Mock {
        persona: MockPersona,
    },
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Llm => "llm",
            Backend::Scripted { .. } => "scripted",
            Backend::Mock { .. } => "mock",
        }
    }
}

mod program_source {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::dsl::{parse_strategy, StrategyProgram};

    pub fn serialize<S: Serializer>(p: &StrategyProgram, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&p.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StrategyProgram, D::Error> {
        let source = String::deserialize(d)?;
        parse_strategy(&source).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: AgentId,
    pub strategy_text: String,
    pub backend: Backend,
}

/// A survivor's strategy and mean score, as shown to new agents.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorAdvice {
    pub strategy_text: String,
    pub score: f64,
}

/// Everything a donor is told when it has to decide.
#[derive(Debug, Clone, Copy)]
pub struct DonationContext<'a> {
    pub game: &'a GameConfig,
    pub donor: &'a AgentProfile,
    pub recipient: AgentId,
    pub recipient_resources: f64,
    pub donor_resources: f64,
    pub round: u32,
    pub generation: u32,
    pub run: u8,
    pub trace: &'a [TraceEntry],
    pub punishment_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub donation: f64,
    pub punishment_spend: f64,
    pub raw_response: String,
    /// The stated amounts exceeded the donor's resources and were scaled down.
    pub clamped: bool,
    /// No amount could be read from the response; the donation defaulted to 0.
    pub parse_failed: bool,
}

/// The prompt/response pair behind a text-based decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub request_id: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decided {
    pub decision: Decision,
    pub exchange: Option<Exchange>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicited {
    pub strategy_text: String,
    pub exchange: Option<Exchange>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("agent {0} produced an empty strategy")]
    EmptyStrategy(AgentId),
    #[error("agent {0} uses the llm backend but no gateway is configured")]
    NoGateway(AgentId),
}

/// Shared machinery for asking agents things during one experiment.
pub struct AgentRuntime<'a> {
    pub game: &'a GameConfig,
    pub gateway: Option<&'a Gateway>,
    pub settings: RequestSettings,
    pub system_prompt: String,
    pub master_seed: u64,
}

impl<'a> AgentRuntime<'a> {
    pub fn new(
        game: &'a GameConfig,
        gateway: Option<&'a Gateway>,
        settings: RequestSettings,
        master_seed: u64,
    ) -> Self {
        Self {
            game,
            gateway,
            settings,
            system_prompt: render_system_prompt(game),
            master_seed,
        }
    }

    fn gateway_for(&self, agent: AgentId) -> Result<&Gateway, AgentError> {
        self.gateway.ok_or(AgentError::NoGateway(agent))
    }

    /// Asks a new agent for its strategy. Scripted agents describe their
    /// program instead.
    pub fn elicit_strategy(
        &self,
        profile: &AgentProfile,
        generation: u32,
        advice: &[SurvivorAdvice],
    ) -> Result<Elicited, AgentError> {
        if let Backend::Scripted { program, .. } = &profile.backend {
            return Ok(Elicited {
                strategy_text: program.to_string(),
                exchange: None,
            });
        }
        let prompt = render_strategy_prompt(profile.id, generation, advice)?;
        let request = CompletionRequest::new(
            self.system_prompt.clone(),
            prompt,
            RequestContext {
                generation,
                run: None,
                round: None,
                agent: profile.id,
                purpose: Purpose::Strategy,
            },
            &self.settings,
        );
        let response = match &profile.backend {
            Backend::Mock { persona } => persona.strategy_response(),
            _ => self.gateway_for(profile.id)?.complete(&request)?,
        };
        let strategy_text =
            extract_strategy(&response).ok_or(AgentError::EmptyStrategy(profile.id))?;
        Ok(Elicited {
            strategy_text,
            exchange: Some(Exchange {
                request_id: request.request_id,
                prompt: request.user_text,
                response,
            }),
        })
    }

    pub fn decide(&self, ctx: &DonationContext<'_>) -> Result<Decided, AgentError> {
        let donor = ctx.donor;
        if let Backend::Scripted { program, .. } = &donor.backend {
            return Ok(Decided {
                decision: self.scripted_decision(program, ctx),
                exchange: None,
            });
        }
        let prompt = render_donation_prompt(ctx);
        let request = CompletionRequest::new(
            self.system_prompt.clone(),
            prompt,
            RequestContext {
                generation: ctx.generation,
                run: Some(ctx.run),
                round: Some(ctx.round),
                agent: donor.id,
                purpose: Purpose::Donation,
            },
            &self.settings,
        );
        let response = match &donor.backend {
            Backend::Mock { persona } => persona.donation_response(ctx),
            _ => self.gateway_for(donor.id)?.complete(&request)?,
        };
        let decision = parse_decision(&response, ctx.donor_resources, ctx.punishment_enabled);
        if decision.parse_failed {
            tracing::warn!(
                agent = %donor.id,
                round = ctx.round,
                "could not read an amount from the response; donating 0"
            );
        }
        Ok(Decided {
            decision,
            exchange: Some(Exchange {
                request_id: request.request_id,
                prompt: request.user_text,
                response,
            }),
        })
    }

    fn scripted_decision(&self, program: &StrategyProgram, ctx: &DonationContext<'_>) -> Decision {
        let id = ctx.donor.id;
        let eval = EvalContext {
            round: ctx.round,
            trace: ctx.trace,
            donor_resources: ctx.donor_resources,
            jitter_seed: derive_seed(
                self.master_seed,
                Stream::Jitter,
                &[
                    ctx.generation as u64,
                    ctx.run as u64,
                    ctx.round as u64,
                    id.generation as u64,
                    id.member as u64,
                ],
            ),
        };
        let donation = evaluate(program, &eval) * ctx.donor_resources;
        let spend = if ctx.punishment_enabled {
            evaluate_punishment(program, &eval) * ctx.donor_resources
        } else {
            0.0
        };
        let (donation, punishment_spend, clamped) =
            parse::fit_to_resources(donation, spend, ctx.donor_resources);
        Decision {
            donation,
            punishment_spend,
            raw_response: String::new(),
            clamped,
            parse_failed: false,
        }
    }
}
