//! Canonical source form. Numbers print as plain decimals (never `%`) in
//! their shortest round-trip representation, so parse-print-parse is exact.

use std::fmt::{self, Display, Formatter};

use super::{
    Action, BinOp, Condition, Expr, Func, Operand, StrategyProgram, Var, Weights,
};

struct Num(f64);

impl Display for Num {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Signed(f64);

impl Display for Signed {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.0.is_sign_negative() && self.0 != 0.0 {
            write!(f, "-{}", -self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Display for StrategyProgram {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut clauses = vec![format!("init {}", Num(self.initial_fraction))];
        if let Some(rule) = &self.trace_rule {
            let combo = match &rule.weights {
                Weights::Uniform(n) => format!("avg(t1..t{n})"),
                Weights::Explicit(w) => {
                    let parts: Vec<String> = w.iter().map(|x| Num(*x).to_string()).collect();
                    format!("wavg({})", parts.join(", "))
                }
            };
            if rule.offset < 0.0 {
                clauses.push(format!("later {combo} - {}", Num(-rule.offset)));
            } else if rule.offset > 0.0 {
                clauses.push(format!("later {combo} + {}", Num(rule.offset)));
            } else {
                clauses.push(format!("later {combo}"));
            }
        }
        clauses.push(format!(
            "cap {} {}",
            Num(self.caps.min),
            Num(self.caps.max)
        ));
        for rule in &self.threshold_rules {
            let action = match &rule.action {
                Action::Set(e) => format!("set {e}"),
                Action::Add(e) => format!("add {e}"),
            };
            clauses.push(format!("when {} then {action}", rule.condition));
        }
        if let Some(d) = &self.periodic_drift {
            clauses.push(format!("drift {} every {}", Signed(d.delta), d.every));
        }
        if self.jitter > 0.0 {
            clauses.push(format!("jitter {}", Num(self.jitter)));
        }
        for fr in &self.final_rounds {
            clauses.push(format!("final {} add {}", Num(fr.share), Signed(fr.delta)));
        }
        if let Some(p) = &self.punish_rule {
            clauses.push(format!(
                "punish when {} spend {}",
                p.condition,
                Num(p.spend_fraction)
            ));
        }
        f.write_str(&clauses.join("; "))
    }
}

impl Display for Condition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Compare(lhs, op, rhs) => {
                match lhs {
                    Operand::Any => f.write_str("any")?,
                    Operand::All => f.write_str("all")?,
                    Operand::Expr(e) => write!(f, "{e}")?,
                }
                write!(f, " {} {rhs}", op.symbol())
            }
            // `and` binds tighter than `or`, and conditions have no grouping
            // syntax, so an `or` under an `and` cannot be printed faithfully.
            // The parser never builds one.
            Condition::And(a, b) => write!(f, "{a} and {b}"),
            Condition::Or(a, b) => write!(f, "{a} or {b}"),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{}", Num(*n)),
            Expr::Var(v) => match v {
                Var::Trace(k) => write!(f, "t{k}"),
                Var::Mean => f.write_str("mean"),
                Var::Current => f.write_str("current"),
                Var::Init => f.write_str("init"),
                Var::Resources => f.write_str("resources"),
                Var::Round => f.write_str("round"),
            },
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, args) => {
                let name = match func {
                    Func::Min => "min",
                    Func::Max => "max",
                    Func::Abs => "abs",
                };
                let parts: Vec<String> = args.iter().map(ToString::to_string).collect();
                write!(f, "{name}({})", parts.join(", "))
            }
        }
    }
}
