use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, BinOp, Condition, Expr, Func, Operand, StrategyProgram, TraceRule, Var};
use crate::game::TraceEntry;

/// What a scripted donor can see when deciding.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub round: u32,
    pub trace: &'a [TraceEntry],
    pub donor_resources: f64,
    /// Seed for the jitter draw of this one decision.
    pub jitter_seed: u64,
}

struct Env<'a> {
    ctx: &'a EvalContext<'a>,
    init: f64,
    current: f64,
}

impl Env<'_> {
    fn trace(&self, k: usize) -> Option<f64> {
        self.ctx.trace.get(k - 1).map(|e| e.fraction)
    }

    fn mean(&self) -> Option<f64> {
        let t = self.ctx.trace;
        (!t.is_empty()).then(|| t.iter().map(|e| e.fraction).sum::<f64>() / t.len() as f64)
    }

    /// `None` when the expression reads a trace entry that does not exist.
    fn expr(&self, expr: &Expr) -> Option<f64> {
        Some(match expr {
            Expr::Num(n) => *n,
            Expr::Var(v) => match v {
                Var::Trace(k) => self.trace(*k)?,
                Var::Mean => self.mean()?,
                Var::Current => self.current,
                Var::Init => self.init,
                Var::Resources => self.ctx.donor_resources,
                Var::Round => self.ctx.round as f64,
            },
            Expr::Neg(e) => -self.expr(e)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return None;
                        }
                        a / b
                    }
                }
            }
            Expr::Call(func, args) => {
                let vals: Option<Vec<f64>> = args.iter().map(|a| self.expr(a)).collect();
                let vals = vals?;
                match func {
                    Func::Abs => vals[0].abs(),
                    Func::Min => vals.into_iter().fold(f64::INFINITY, f64::min),
                    Func::Max => vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
                }
            }
        })
    }

    fn holds(&self, cond: &Condition) -> bool {
        match cond {
            Condition::Compare(lhs, op, rhs) => {
                let Some(rhs) = self.expr(rhs) else {
                    return false;
                };
                let fractions = self.ctx.trace.iter().map(|e| e.fraction);
                match lhs {
                    Operand::Expr(e) => self.expr(e).is_some_and(|l| op.holds(l, rhs)),
                    Operand::Any => fractions.clone().any(|f| op.holds(f, rhs)),
                    Operand::All => {
                        !self.ctx.trace.is_empty() && fractions.clone().all(|f| op.holds(f, rhs))
                    }
                }
            }
            Condition::And(a, b) => self.holds(a) && self.holds(b),
            Condition::Or(a, b) => self.holds(a) || self.holds(b),
        }
    }
}

/// Weighted combination over the entries that exist, with weights
/// renormalized over those entries.
fn combine(rule: &TraceRule, trace: &[TraceEntry]) -> f64 {
    let weights = rule.weights.values();
    let used = weights.len().min(trace.len());
    let total: f64 = weights[..used].iter().sum();
    let combined = if total > 0.0 {
        weights[..used]
            .iter()
            .zip(trace)
            .map(|(w, e)| w * e.fraction)
            .sum::<f64>()
            / total
    } else {
        trace[..used].iter().map(|e| e.fraction).sum::<f64>() / used as f64
    };
    combined + rule.offset
}

/// Donation fraction chosen by `program`. An empty trace always yields the
/// initial fraction; otherwise the trace rule, threshold rules, drift and
/// jitter are applied in that order and the result is clamped to the caps.
pub fn evaluate(program: &StrategyProgram, ctx: &EvalContext<'_>) -> f64 {
    if ctx.trace.is_empty() {
        return program.initial_fraction;
    }
    let mut env = Env {
        ctx,
        init: program.initial_fraction,
        current: program.initial_fraction,
    };
    if let Some(rule) = &program.trace_rule {
        env.current = combine(rule, ctx.trace);
    }
    for rule in &program.threshold_rules {
        if !env.holds(&rule.condition) {
            continue;
        }
        match &rule.action {
            Action::Set(e) => {
                if let Some(v) = env.expr(e) {
                    env.current = v;
                }
            }
            Action::Add(e) => {
                if let Some(v) = env.expr(e) {
                    env.current += v;
                }
            }
        }
    }
    let mut value = env.current;
    if let Some(drift) = &program.periodic_drift {
        let periods = (ctx.round.saturating_sub(1) / drift.every) as f64;
        value += drift.delta * periods;
    }
    if program.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.jitter_seed);
        value += rng.random_range(-program.jitter..=program.jitter);
    }
    let lo = program.caps.min.max(0.0);
    let hi = program.caps.max.min(1.0);
    if value.is_nan() {
        return lo;
    }
    value.clamp(lo, hi)
}

/// Share of the donor's resources to spend on punishment, 0 when the
/// program has no punishment rule or it does not fire.
pub fn evaluate_punishment(program: &StrategyProgram, ctx: &EvalContext<'_>) -> f64 {
    let Some(rule) = &program.punish_rule else {
        return 0.0;
    };
    if ctx.trace.is_empty() {
        return 0.0;
    }
    let env = Env {
        ctx,
        init: program.initial_fraction,
        current: program.initial_fraction,
    };
    if env.holds(&rule.condition) {
        rule.spend_fraction
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_strategy;
    use crate::game::AgentId;

    fn trace(fractions: &[f64]) -> Vec<TraceEntry> {
        fractions
            .iter()
            .enumerate()
            .map(|(i, f)| TraceEntry {
                round: (fractions.len() - i) as u32,
                actor: AgentId::new(1, i as u32 + 1),
                actor_recipient: AgentId::new(1, i as u32 + 2),
                fraction: *f,
                punished: false,
            })
            .collect()
    }

    fn ctx(round: u32, trace: &[TraceEntry]) -> EvalContext<'_> {
        EvalContext {
            round,
            trace,
            donor_resources: 74.0,
            jitter_seed: 1,
        }
    }

    #[test]
    fn claude_first_generation_on_prompt_trace() {
        let p = parse_strategy("init 40%; later avg(t1..t3); cap 10% 70%").unwrap();
        let t = trace(&[0.6, 0.5, 0.5]);
        let f = evaluate(&p, &ctx(4, &t));
        // (0.6 + 0.5 + 0.5) / 3
        assert!((f - 1.6 / 3.0).abs() < 1e-12);
        assert!((f * 74.0 - 39.4667).abs() < 1e-3);
        assert_eq!(evaluate(&p, &ctx(1, &[])), 0.4);
    }

    #[test]
    fn renormalizes_over_available_entries() {
        let three = parse_strategy("init 0%; later wavg(76%, 19%, 5%) + 19%").unwrap();
        let one = parse_strategy("init 0%; later wavg(100%) + 19%").unwrap();
        let t = trace(&[0.3]);
        assert_eq!(evaluate(&three, &ctx(2, &t)), evaluate(&one, &ctx(2, &t)));
        let t2 = trace(&[0.3, 0.6]);
        let expected = (0.76 * 0.3 + 0.19 * 0.6) / 0.95 + 0.19;
        assert!((evaluate(&three, &ctx(3, &t2)) - expected).abs() < 1e-12);
    }

    #[test]
    fn threshold_rules_and_caps() {
        let p = parse_strategy(
            "init 62%; later wavg(76%, 19%, 5%) + 19%; cap 28% 89%;
             when t1 < 24% then set max(47% - (24% - t1), 25%)",
        )
        .unwrap();
        // A gave 10%: 47 - 14 = 33%, inside the caps.
        let t = trace(&[0.1, 0.5, 0.5]);
        assert!((evaluate(&p, &ctx(4, &t)) - 0.33).abs() < 1e-12);
        // A gave 0%: 47 - 24 = 23%, below the 28% cap.
        let t = trace(&[0.0, 0.0, 0.0]);
        assert_eq!(evaluate(&p, &ctx(4, &t)), 0.28);
        // Generous chain: 0.9 + 0.19 clamps to 89%.
        let t = trace(&[0.9, 0.9, 0.9]);
        assert_eq!(evaluate(&p, &ctx(4, &t)), 0.89);
    }

    #[test]
    fn quantifiers() {
        let p = parse_strategy(
            "init 6%; when any > 50% then add 7%; when any < 25% then add -4%; cap 6% 42%",
        )
        .unwrap();
        assert!((evaluate(&p, &ctx(3, &trace(&[0.6, 0.3]))) - 0.13).abs() < 1e-12);
        assert!((evaluate(&p, &ctx(3, &trace(&[0.6, 0.1]))) - 0.09).abs() < 1e-12);
        assert_eq!(evaluate(&p, &ctx(3, &trace(&[0.1, 0.1]))), 0.06);
        let all = parse_strategy("init 10%; when all > 60% then add 5%").unwrap();
        assert!((evaluate(&all, &ctx(3, &trace(&[0.7, 0.8]))) - 0.15).abs() < 1e-12);
        assert_eq!(evaluate(&all, &ctx(3, &trace(&[0.7, 0.5]))), 0.1);
    }

    #[test]
    fn missing_entries_disable_rules() {
        let p = parse_strategy("init 20%; when t2 > 10% then set 90%").unwrap();
        assert_eq!(evaluate(&p, &ctx(2, &trace(&[0.5]))), 0.2);
        assert_eq!(evaluate(&p, &ctx(3, &trace(&[0.5, 0.5]))), 0.9);
    }

    #[test]
    fn drift_accumulates_per_period() {
        let p = parse_strategy("init 50%; drift 1% every 3").unwrap();
        let t = trace(&[0.2]);
        assert_eq!(evaluate(&p, &ctx(3, &t)), 0.5);
        assert!((evaluate(&p, &ctx(4, &t)) - 0.51).abs() < 1e-12);
        assert!((evaluate(&p, &ctx(10, &t)) - 0.53).abs() < 1e-12);
    }

    #[test]
    fn jitter_is_seeded_and_bounded() {
        let p = parse_strategy("init 50%; jitter 2%").unwrap();
        let t = trace(&[0.2]);
        let mut c = ctx(2, &t);
        let a = evaluate(&p, &c);
        assert_eq!(a, evaluate(&p, &c));
        assert!((a - 0.5).abs() <= 0.02);
        let mut differs = false;
        for seed in 0..20 {
            c.jitter_seed = seed;
            let v = evaluate(&p, &c);
            assert!((v - 0.5).abs() <= 0.02 + 1e-12);
            differs |= v != a;
        }
        assert!(differs);
        assert_eq!(evaluate(&p, &ctx(1, &[])), 0.5);
    }

    #[test]
    fn final_rounds_never_fire() {
        let with = parse_strategy("init 30%; later t1; final 14% add 7%").unwrap();
        let without = parse_strategy("init 30%; later t1").unwrap();
        for round in 2..=12 {
            let t = trace(&[0.4]);
            assert_eq!(evaluate(&with, &ctx(round, &t)), evaluate(&without, &ctx(round, &t)));
        }
    }

    #[test]
    fn punishment_rule() {
        let p = parse_strategy("init 50%; punish when t1 < 10% spend 20%").unwrap();
        assert_eq!(evaluate_punishment(&p, &ctx(2, &trace(&[0.05]))), 0.2);
        assert_eq!(evaluate_punishment(&p, &ctx(2, &trace(&[0.5]))), 0.0);
        assert_eq!(evaluate_punishment(&p, &ctx(1, &[])), 0.0);
    }
}
