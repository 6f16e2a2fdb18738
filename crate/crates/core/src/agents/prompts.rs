//! Prompt templates and rendering.
//!
//! Templates live in `templates/*.txt` and use `{name}` placeholders. The
//! placeholder sets in [`PLACEHOLDERS`] are part of the public contract;
//! bump [`TEMPLATE_VERSION`] whenever a template's wording changes, since
//! recorded transcripts are keyed on the exact prompt text.

use thiserror::Error;

use super::{DonationContext, SurvivorAdvice};
use crate::game::{AgentId, GameConfig, TraceEntry};

pub const TEMPLATE_VERSION: u32 = 1;

const SYSTEM: &str = include_str!("../../templates/system.txt");
const PUNISHMENT: &str = include_str!("../../templates/punishment.txt");
const STRATEGY: &str = include_str!("../../templates/strategy.txt");
const STRATEGY_FIRST: &str = include_str!("../../templates/strategy_first.txt");
const STRATEGY_LATER: &str = include_str!("../../templates/strategy_later.txt");
const DONATION: &str = include_str!("../../templates/donation.txt");

/// Template name and the placeholders it accepts.
pub const PLACEHOLDERS: &[(&str, &[&str])] = &[
    ("system", &["endowment", "multiplier"]),
    ("punishment", &["punishment_multiplier"]),
    ("strategy", &["name", "instruction"]),
    ("strategy_first", &[]),
    ("strategy_later", &["advice"]),
    (
        "donation",
        &[
            "name",
            "strategy",
            "generation",
            "round",
            "recipient",
            "recipient_resources",
            "trace_paragraph",
            "donor_resources",
            "punishment_option",
        ],
    ),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template has no value for placeholder `{0}`")]
    Missing(String),
    #[error("unterminated placeholder in template")]
    Unterminated,
}

/// Substitutes `{name}` placeholders. Every placeholder must have a value.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let template = template.trim_end_matches('\n');
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let end = after.find('}').ok_or(TemplateError::Unterminated)?;
        let key = &after[..end];
        let value = values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::Missing(key.to_string()))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn render(template: &str, values: &[(&str, &str)]) -> String {
    render_template(template, values).expect("bundled templates match their placeholders")
}

/// Resource amounts: at most two decimals, trailing zeros dropped.
pub fn format_units(amount: f64) -> String {
    let s = format!("{:.2}", amount);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Donation fractions as whole percentages.
pub fn format_percent(fraction: f64) -> String {
    format!("{}%", (fraction * 100.0).round() as i64)
}

pub fn render_system_prompt(config: &GameConfig) -> String {
    let base = render(
        SYSTEM,
        &[
            ("endowment", &format_units(config.endowment)),
            ("multiplier", &format_units(config.donation_multiplier)),
        ],
    );
    if config.punishment_enabled {
        format!("{base}\n\n{}", punishment_text(config))
    } else {
        base
    }
}

fn punishment_text(config: &GameConfig) -> String {
    render(
        PUNISHMENT,
        &[(
            "punishment_multiplier",
            &format_units(config.punishment_multiplier),
        )],
    )
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("generation 1 has no previous generation to take advice from")]
    AdviceInFirstGeneration,
    #[error("generation {0} needs advice from the previous generation's survivors")]
    MissingAdvice(u32),
}

pub fn render_strategy_prompt(
    agent: AgentId,
    generation: u32,
    survivor_advice: &[SurvivorAdvice],
) -> Result<String, PromptError> {
    let instruction = match (generation, survivor_advice.is_empty()) {
        (1, true) => render(STRATEGY_FIRST, &[]),
        (1, false) => return Err(PromptError::AdviceInFirstGeneration),
        (g, true) => return Err(PromptError::MissingAdvice(g)),
        (_, false) => {
            let advice: Vec<String> = survivor_advice
                .iter()
                .map(|a| {
                    format!(
                        "- \"{}\" (final score: {:.2})",
                        a.strategy_text, a.score
                    )
                })
                .collect();
            render(STRATEGY_LATER, &[("advice", &advice.join("\n"))])
        }
    };
    Ok(render(
        STRATEGY,
        &[("name", &agent.to_string()), ("instruction", &instruction)],
    ))
}

pub fn trace_sentence(entry: &TraceEntry) -> String {
    let mut s = format!(
        "In round {}, {} donated {} of their resources to {}",
        entry.round,
        entry.actor,
        format_percent(entry.fraction),
        entry.actor_recipient
    );
    if entry.punished {
        s.push_str(" and punished them");
    }
    s.push('.');
    s
}

pub fn render_donation_prompt(ctx: &DonationContext<'_>) -> String {
    let trace_paragraph = if ctx.trace.is_empty() {
        String::new()
    } else {
        let sentences: Vec<String> = ctx.trace.iter().map(trace_sentence).collect();
        format!(
            "Here is what {} and their earlier partners did in previous rounds: {} ",
            ctx.recipient,
            sentences.join(" ")
        )
    };
    let punishment_option = if ctx.punishment_enabled {
        format!(" {}", punishment_text(ctx.game))
    } else {
        String::new()
    };
    render(
        DONATION,
        &[
            ("name", &ctx.donor.id.to_string()),
            ("strategy", &ctx.donor.strategy_text),
            ("generation", &ctx.generation.to_string()),
            ("round", &ctx.round.to_string()),
            ("recipient", &ctx.recipient.to_string()),
            ("recipient_resources", &format_units(ctx.recipient_resources)),
            ("trace_paragraph", &trace_paragraph),
            ("donor_resources", &format_units(ctx.donor_resources)),
            ("punishment_option", &punishment_option),
        ],
    )
}
