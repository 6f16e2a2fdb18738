//! Strategy DSL: a small declarative language for scripted donors.
//!
//! A program is a `;`-separated list of clauses:
//!
//! ```text
//! init 40%; later avg(t1..t3); cap 10% 70%
//! ```
//!
//! `t1` is the recipient's most recent donation fraction, `t2` what their
//! partner did the round before, and so on. The grammar is documented in
//! `docs/strategy-dsl.md`.

mod corpus;
mod eval;
mod parser;
mod print;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{corpus_load, corpus_program, CorpusError, CORPUS_NAMES};
pub use eval::{evaluate, evaluate_punishment, EvalContext};
pub use parser::{parse_strategy, parse_strategy_with, ParseOptions};

/// Deepest trace reference accepted by [`parse_strategy`].
pub const DEFAULT_MAX_TRACE_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProgram {
    pub initial_fraction: f64,
    pub trace_rule: Option<TraceRule>,
    pub caps: Caps,
    pub threshold_rules: Vec<ThresholdRule>,
    pub periodic_drift: Option<Drift>,
    /// Half-width of the uniform random adjustment.
    pub jitter: f64,
    /// Clauses keyed on the rounds remaining. Agents never learn the horizon,
    /// so these are kept for fidelity but never fire.
    pub final_rounds: Vec<FinalRounds>,
    pub punish_rule: Option<PunishRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRule {
    pub weights: Weights,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Weights {
    /// `avg(t1..tN)`
    Uniform(usize),
    /// `wavg(w1, w2, ...)`
    Explicit(Vec<f64>),
}

impl Weights {
    pub fn len(&self) -> usize {
        match self {
            Weights::Uniform(n) => *n,
            Weights::Explicit(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Weights::Uniform(n) => vec![1.0 / *n as f64; *n],
            Weights::Explicit(w) => w.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub min: f64,
    pub max: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub condition: Condition,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Set(Expr),
    Add(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub delta: f64,
    pub every: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalRounds {
    pub share: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PunishRule {
    pub condition: Condition,
    /// Share of the donor's resources spent on punishment.
    pub spend_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Condition {
    Compare(Operand, CmpOp, Expr),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
}

/// Left side of a comparison: a plain expression, or a quantifier over
/// every available trace entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Expr(Expr),
    Any,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => (lhs - rhs).abs() < 1e-12,
            CmpOp::Ne => (lhs - rhs).abs() >= 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Var {
    /// `tK`, 1-based.
    Trace(usize),
    /// Mean of the available trace entries.
    Mean,
    /// The donation fraction computed so far.
    Current,
    Init,
    Resources,
    Round,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Min,
    Max,
    Abs,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("semantic error: {0}")]
    Semantic(String),
}

impl StrategyProgram {
    /// A program that always donates `fraction`.
    pub fn constant(fraction: f64) -> Self {
        Self {
            initial_fraction: fraction,
            trace_rule: None,
            caps: Caps::default(),
            threshold_rules: Vec::new(),
            periodic_drift: None,
            jitter: 0.0,
            final_rounds: Vec::new(),
            punish_rule: None,
        }
    }

    /// Copy with `initial_fraction` and the trace-rule offset shifted by the
    /// given absolute amounts. The initial fraction stays inside the caps and
    /// the offset inside [-1, 1].
    pub fn perturbed(&self, initial_delta: f64, offset_delta: f64) -> Self {
        let mut out = self.clone();
        out.initial_fraction =
            (self.initial_fraction + initial_delta).clamp(self.caps.min, self.caps.max);
        if let Some(rule) = out.trace_rule.as_mut() {
            rule.offset = (rule.offset + offset_delta).clamp(-1.0, 1.0);
        }
        out
    }
}
