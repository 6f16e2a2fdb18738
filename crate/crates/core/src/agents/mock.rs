use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::prompts::{format_percent, format_units};
use super::DonationContext;
use crate::seeds::{derive_seed, Stream};

/// A deterministic stand-in for a language model. It donates a share that
/// moves from `base` toward the recipient's last observed fraction by
/// `reciprocity`, and punishes recipients whose last fraction fell below
/// `punish_below` when punishment is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockPersona {
    pub base: f64,
    pub reciprocity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub punish_below: Option<f64>,
}

fn floor2(x: f64) -> f64 {
    ((x * 100.0) + 1e-9).floor() / 100.0
}

impl MockPersona {
    /// Persona for a founding agent, drawn from the mock stream.
    pub fn sample(master_seed: u64, generation: u32, member: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            master_seed,
            Stream::Mock,
            &[generation as u64, member as u64],
        ));
        let base = rng.random_range(0.1..0.7);
        let reciprocity = rng.random_range(0.0..1.0);
        let punish_below = rng.random_bool(0.5).then(|| rng.random_range(0.05..0.3));
        Self {
            base,
            reciprocity,
            punish_below,
        }
    }

    /// A child persona: the parent nudged by small uniform steps.
    pub fn offspring(&self, rng: &mut impl Rng) -> Self {
        let base = (self.base + rng.random_range(-0.1..=0.1)).clamp(0.0, 1.0);
        let reciprocity = (self.reciprocity + rng.random_range(-0.1..=0.1)).clamp(0.0, 1.0);
        let punish_below = self
            .punish_below
            .map(|t| (t + rng.random_range(-0.05..=0.05)).clamp(0.0, 1.0));
        Self {
            base,
            reciprocity,
            punish_below,
        }
    }

    pub fn fraction(&self, last_observed: Option<f64>) -> f64 {
        match last_observed {
            None => self.base,
            Some(t1) => (self.base + self.reciprocity * (t1 - self.base)).clamp(0.0, 1.0),
        }
    }

    pub fn strategy_response(&self) -> String {
        let mut s = format!(
            "A reputation for generosity tends to pay off, but unconditional giving can be exploited.\n\
             My strategy will be to give {} of my resources when I know nothing about the recipient, \
             and otherwise to move {} of the way from that share toward the share the recipient passed on most recently",
            format_percent(self.base),
            format_percent(self.reciprocity),
        );
        if let Some(t) = self.punish_below {
            s.push_str(&format!(
                ", punishing anyone who passed on less than {}",
                format_percent(t)
            ));
        }
        s.push('.');
        s
    }

    pub fn donation_response(&self, ctx: &DonationContext<'_>) -> String {
        let last = ctx.trace.first().map(|e| e.fraction);
        let res = ctx.donor_resources;
        let amount = floor2(self.fraction(last) * res);
        let mut s = match last {
            None => String::from("There is no history for this recipient yet, so I use my opening share. "),
            Some(t1) => format!(
                "The recipient's most recent share was {}, and I adjust my opening share toward it. ",
                format_percent(t1)
            ),
        };
        s.push_str(&format!("I will give up {} units.", format_units(amount)));
        if let (true, Some(threshold), Some(t1)) = (ctx.punishment_enabled, self.punish_below, last) {
            let spend = floor2(0.1 * res).min(floor2(res - amount));
            if t1 < threshold && spend > 0.0 {
                s.push_str(&format!(
                    " I will also punish them by spending {} units.",
                    format_units(spend)
                ));
            }
        }
        s
    }
}
