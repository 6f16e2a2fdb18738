use super::{
    Action, BinOp, Caps, CmpOp, Condition, DslError, Drift, Expr, FinalRounds, Func, Operand,
    PunishRule, StrategyProgram, ThresholdRule, TraceRule, Var, Weights, DEFAULT_MAX_TRACE_DEPTH,
};

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Largest `tK` index and weight count a program may use.
    pub max_trace_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_trace_depth: DEFAULT_MAX_TRACE_DEPTH,
        }
    }
}

pub fn parse_strategy(source: &str) -> Result<StrategyProgram, DslError> {
    parse_strategy_with(source, ParseOptions::default())
}

pub fn parse_strategy_with(
    source: &str,
    options: ParseOptions,
) -> Result<StrategyProgram, DslError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: end_position(source),
    };
    let clauses = parser.program()?;
    build(clauses, options)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Percent,
    Semi,
    LParen,
    RParen,
    Comma,
    DotDot,
    Plus,
    Minus,
    Star,
    Slash,
    Cmp(CmpOp),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn end_position(source: &str) -> (usize, usize) {
    let line = source.lines().count().max(1);
    let column = source.lines().last().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn lex(source: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut push = |tok, width: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            });
            *i += width;
            *col += width;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '*' => push(Tok::Star, 1, &mut i, &mut col),
            '/' => push(Tok::Slash, 1, &mut i, &mut col),
            '%' => push(Tok::Percent, 1, &mut i, &mut col),
            '.' if chars.get(i + 1) == Some(&'.') => push(Tok::DotDot, 2, &mut i, &mut col),
            '<' | '>' | '=' | '!' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let op = match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    ('>', true) => CmpOp::Ge,
                    ('=', true) => CmpOp::Eq,
                    ('!', true) => CmpOp::Ne,
                    _ => {
                        return Err(DslError::Syntax {
                            line,
                            column: col,
                            message: format!("unexpected character `{c}`"),
                        })
                    }
                };
                push(Tok::Cmp(op), if eq { 2 } else { 1 }, &mut i, &mut col);
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value = text.parse::<f64>().map_err(|e| DslError::Syntax {
                    line,
                    column: col,
                    message: e.to_string(),
                })?;
                out.push(Token {
                    tok: Tok::Num(value),
                    line,
                    column: col,
                });
                col += i - start;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(text.to_ascii_lowercase()),
                    line,
                    column: col,
                });
                col += i - start;
            }
            other => {
                return Err(DslError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

enum Clause {
    Init(f64),
    Later(TraceRule),
    Cap(f64, f64),
    When(ThresholdRule),
    Drift(Drift),
    Jitter(f64),
    Final(FinalRounds),
    Punish(PunishRule),
}

impl Clause {
    fn keyword(&self) -> &'static str {
        match self {
            Clause::Init(_) => "init",
            Clause::Later(_) => "later",
            Clause::Cap(..) => "cap",
            Clause::When(_) => "when",
            Clause::Drift(_) => "drift",
            Clause::Jitter(_) => "jitter",
            Clause::Final(_) => "final",
            Clause::Punish(_) => "punish",
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + offset).map(|t| &t.tok)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        let (line, column) = self
            .tokens
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.column));
        Err(DslError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Num(n)) => format!("number {n}"),
            Some(t) => format!("{t:?}"),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), DslError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", self.describe_next()))
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.describe_next()))
        }
    }

    fn program(&mut self) -> Result<Vec<Clause>, DslError> {
        let mut clauses = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.peek().is_none() {
                break;
            }
            clauses.push(self.clause()?);
            if self.peek().is_some() && !self.eat(&Tok::Semi) {
                return self.error(format!("expected `;`, found {}", self.describe_next()));
            }
        }
        Ok(clauses)
    }

    fn clause(&mut self) -> Result<Clause, DslError> {
        let kw = match self.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return self.error(format!("expected a clause, found {}", self.describe_next())),
        };
        self.pos += 1;
        match kw.as_str() {
            "init" => Ok(Clause::Init(self.number()?)),
            "later" => {
                let weights = self.weights()?;
                let offset = if self.eat(&Tok::Plus) {
                    self.number()?
                } else if self.eat(&Tok::Minus) {
                    -self.number()?
                } else {
                    0.0
                };
                Ok(Clause::Later(TraceRule { weights, offset }))
            }
            "cap" => {
                let min = self.number()?;
                let max = self.number()?;
                Ok(Clause::Cap(min, max))
            }
            "when" => {
                let condition = self.condition()?;
                self.expect_keyword("then")?;
                let action = if self.eat_keyword("set") {
                    Action::Set(self.expr()?)
                } else if self.eat_keyword("add") {
                    Action::Add(self.expr()?)
                } else {
                    return self.error(format!(
                        "expected `set` or `add`, found {}",
                        self.describe_next()
                    ));
                };
                Ok(Clause::When(ThresholdRule { condition, action }))
            }
            "drift" => {
                let delta = self.signed_number()?;
                self.expect_keyword("every")?;
                let every = self.integer()?;
                Ok(Clause::Drift(Drift {
                    delta,
                    every: every as u32,
                }))
            }
            "jitter" => Ok(Clause::Jitter(self.number()?)),
            "final" => {
                let share = self.number()?;
                self.expect_keyword("add")?;
                let delta = self.signed_number()?;
                Ok(Clause::Final(FinalRounds { share, delta }))
            }
            "punish" => {
                self.expect_keyword("when")?;
                let condition = self.condition()?;
                self.expect_keyword("spend")?;
                let spend_fraction = self.number()?;
                Ok(Clause::Punish(PunishRule {
                    condition,
                    spend_fraction,
                }))
            }
            other => {
                self.pos -= 1;
                self.error(format!("unknown clause `{other}`"))
            }
        }
    }

    /// Unsigned literal; a trailing `%` divides by 100.
    fn number(&mut self) -> Result<f64, DslError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                if self.eat(&Tok::Percent) {
                    Ok(n / 100.0)
                } else {
                    Ok(n)
                }
            }
            _ => self.error(format!("expected a number, found {}", self.describe_next())),
        }
    }

    fn signed_number(&mut self) -> Result<f64, DslError> {
        if self.eat(&Tok::Minus) {
            Ok(-self.number()?)
        } else {
            self.eat(&Tok::Plus);
            self.number()
        }
    }

    fn integer(&mut self) -> Result<u64, DslError> {
        match self.peek() {
            Some(Tok::Num(n)) if n.fract() == 0.0 && *n >= 0.0 => {
                let n = *n as u64;
                self.pos += 1;
                Ok(n)
            }
            _ => self.error(format!(
                "expected an integer, found {}",
                self.describe_next()
            )),
        }
    }

    fn trace_index(&mut self) -> Result<usize, DslError> {
        match self.peek() {
            Some(Tok::Ident(s)) => match trace_ref(s) {
                Some(k) => {
                    self.pos += 1;
                    Ok(k)
                }
                None => self.error(format!("expected a trace reference, found `{s}`")),
            },
            _ => self.error(format!(
                "expected a trace reference, found {}",
                self.describe_next()
            )),
        }
    }

    fn weights(&mut self) -> Result<Weights, DslError> {
        if self.eat_keyword("avg") {
            self.expect(Tok::LParen, "`(`")?;
            let first = self.trace_index()?;
            if first != 1 {
                self.pos -= 1;
                return self.error("averages must start at `t1`");
            }
            self.expect(Tok::DotDot, "`..`")?;
            let last = self.trace_index()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(Weights::Uniform(last))
        } else if self.eat_keyword("wavg") {
            self.expect(Tok::LParen, "`(`")?;
            let mut weights = vec![self.number()?];
            while self.eat(&Tok::Comma) {
                weights.push(self.number()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            Ok(Weights::Explicit(weights))
        } else if let Some(Tok::Ident(s)) = self.peek() {
            match trace_ref(s) {
                // `later tK` puts all weight on one entry.
                Some(k) => {
                    self.pos += 1;
                    let mut w = vec![0.0; k];
                    w[k - 1] = 1.0;
                    Ok(Weights::Explicit(w))
                }
                None => self.error(format!("expected `avg`, `wavg` or `tK`, found `{s}`")),
            }
        } else {
            self.error(format!(
                "expected `avg`, `wavg` or `tK`, found {}",
                self.describe_next()
            ))
        }
    }

    fn condition(&mut self) -> Result<Condition, DslError> {
        let mut lhs = self.conjunction()?;
        while self.eat_keyword("or") {
            let rhs = self.conjunction()?;
            lhs = Condition::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Condition, DslError> {
        let mut lhs = self.comparison()?;
        while self.eat_keyword("and") {
            let rhs = self.comparison()?;
            lhs = Condition::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Condition, DslError> {
        let operand = if self.eat_keyword("any") {
            Operand::Any
        } else if self.eat_keyword("all") {
            Operand::All
        } else {
            Operand::Expr(self.expr()?)
        };
        let op = match self.peek() {
            Some(Tok::Cmp(op)) => {
                let op = *op;
                self.pos += 1;
                op
            }
            _ => {
                return self.error(format!(
                    "expected a comparison operator, found {}",
                    self.describe_next()
                ));
            }
        };
        Ok(Condition::Compare(operand, op, self.expr()?))
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                BinOp::Mul
            } else if self.eat(&Tok::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(Tok::Num(_)) => Ok(Expr::Num(self.number()?)),
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                let func = match name.as_str() {
                    "min" => Some(Func::Min),
                    "max" => Some(Func::Max),
                    "abs" => Some(Func::Abs),
                    _ => None,
                };
                if let Some(func) = func {
                    if self.peek_at(1) == Some(&Tok::LParen) {
                        self.pos += 2;
                        let mut args = vec![self.expr()?];
                        while self.eat(&Tok::Comma) {
                            args.push(self.expr()?);
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        let arity_ok = match func {
                            Func::Abs => args.len() == 1,
                            Func::Min | Func::Max => args.len() >= 2,
                        };
                        if !arity_ok {
                            return Err(DslError::Semantic(format!(
                                "wrong number of arguments to {name}"
                            )));
                        }
                        return Ok(Expr::Call(func, args));
                    }
                }
                let var = match name.as_str() {
                    "mean" => Var::Mean,
                    "current" => Var::Current,
                    "init" => Var::Init,
                    "resources" => Var::Resources,
                    "round" => Var::Round,
                    other => match trace_ref(other) {
                        Some(k) => Var::Trace(k),
                        None => return self.error(format!("unknown name `{other}`")),
                    },
                };
                self.pos += 1;
                Ok(Expr::Var(var))
            }
            _ => self.error(format!(
                "expected an expression, found {}",
                self.describe_next()
            )),
        }
    }
}

fn trace_ref(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('t')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|k| *k >= 1)
}

fn semantic<T>(message: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Semantic(message.into()))
}

fn in_unit(v: f64) -> bool {
    v.is_finite() && (0.0..=1.0).contains(&v)
}

fn build(clauses: Vec<Clause>, options: ParseOptions) -> Result<StrategyProgram, DslError> {
    let mut init = None;
    let mut trace_rule = None;
    let mut caps = None;
    let mut threshold_rules = Vec::new();
    let mut drift = None;
    let mut jitter = None;
    let mut final_rounds = Vec::new();
    let mut punish_rule = None;

    fn once<T>(slot: &mut Option<T>, value: T, kw: &str) -> Result<(), DslError> {
        if slot.replace(value).is_some() {
            return semantic(format!("`{kw}` may appear only once"));
        }
        Ok(())
    }

    for clause in clauses {
        let kw = clause.keyword();
        match clause {
            Clause::Init(v) => once(&mut init, v, kw)?,
            Clause::Later(rule) => once(&mut trace_rule, rule, kw)?,
            Clause::Cap(min, max) => once(&mut caps, Caps { min, max }, kw)?,
            Clause::When(rule) => threshold_rules.push(rule),
            Clause::Drift(d) => once(&mut drift, d, kw)?,
            Clause::Jitter(j) => once(&mut jitter, j, kw)?,
            Clause::Final(f) => final_rounds.push(f),
            Clause::Punish(p) => once(&mut punish_rule, p, kw)?,
        }
    }

    let caps = caps.unwrap_or_default();
    if !in_unit(caps.min) || !in_unit(caps.max) {
        return semantic("caps must lie within 0%..100%");
    }
    if caps.min > caps.max {
        return semantic(format!(
            "caps are inverted: minimum {} exceeds maximum {}",
            caps.min, caps.max
        ));
    }
    let Some(initial_fraction) = init else {
        return semantic("missing `init` clause");
    };
    if !in_unit(initial_fraction) {
        return semantic("initial donation must lie within 0%..100%");
    }
    if initial_fraction < caps.min || initial_fraction > caps.max {
        return semantic("initial donation lies outside the caps");
    }
    if let Some(rule) = &trace_rule {
        let depth = rule.weights.len();
        if depth == 0 {
            return semantic("a trace rule needs at least one weight");
        }
        if depth > options.max_trace_depth {
            return semantic(format!(
                "trace rule uses {depth} entries but traces hold at most {}",
                options.max_trace_depth
            ));
        }
        let weights = rule.weights.values();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return semantic("weights must be finite and non-negative");
        }
        if !rule.offset.is_finite() {
            return semantic("offset must be finite");
        }
    }
    for rule in &threshold_rules {
        check_condition(&rule.condition, options)?;
        match &rule.action {
            Action::Set(e) | Action::Add(e) => check_expr(e, options)?,
        }
    }
    if let Some(d) = &drift {
        if d.every == 0 {
            return semantic("drift period must be at least one round");
        }
    }
    let jitter = jitter.unwrap_or(0.0);
    if !in_unit(jitter) {
        return semantic("jitter must lie within 0%..100%");
    }
    if let Some(p) = &punish_rule {
        check_condition(&p.condition, options)?;
        if !in_unit(p.spend_fraction) {
            return semantic("punishment spend must lie within 0%..100%");
        }
    }

    Ok(StrategyProgram {
        initial_fraction,
        trace_rule,
        caps,
        threshold_rules,
        periodic_drift: drift,
        jitter,
        final_rounds,
        punish_rule,
    })
}

fn check_condition(cond: &Condition, options: ParseOptions) -> Result<(), DslError> {
    match cond {
        Condition::Compare(lhs, _, rhs) => {
            if let Operand::Expr(e) = lhs {
                check_expr(e, options)?;
            }
            check_expr(rhs, options)
        }
        Condition::And(a, b) | Condition::Or(a, b) => {
            check_condition(a, options)?;
            check_condition(b, options)
        }
    }
}

fn check_expr(expr: &Expr, options: ParseOptions) -> Result<(), DslError> {
    match expr {
        Expr::Var(Var::Trace(k)) if *k > options.max_trace_depth => semantic(format!(
            "`t{k}` exceeds the trace depth of {}",
            options.max_trace_depth
        )),
        Expr::Num(n) if !n.is_finite() => semantic("numbers must be finite"),
        Expr::Neg(e) => check_expr(e, options),
        Expr::Bin(_, a, b) => {
            check_expr(a, options)?;
            check_expr(b, options)
        }
        Expr::Call(_, args) => args.iter().try_for_each(|a| check_expr(a, options)),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_claude_first_generation() {
        let p = parse_strategy("init 40%; later avg(t1..t3); cap 10% 70%").unwrap();
        assert_eq!(p.initial_fraction, 0.4);
        assert_eq!(p.caps, Caps { min: 0.1, max: 0.7 });
        let rule = p.trace_rule.unwrap();
        assert_eq!(rule.weights.values(), vec![1.0 / 3.0; 3]);
        assert_eq!(rule.offset, 0.0);
    }

    #[test]
    fn single_clause() {
        let p = parse_strategy("init 100%").unwrap();
        assert_eq!(p, StrategyProgram::constant(1.0));
    }

    #[test]
    fn inverted_caps() {
        assert!(matches!(
            parse_strategy("cap 70% 10%"),
            Err(DslError::Semantic(m)) if m.contains("inverted")
        ));
    }

    #[test]
    fn syntax_error_positions() {
        let err = parse_strategy("init 40%;\nlater avg(t1..t3) +").unwrap_err();
        assert!(matches!(err, DslError::Syntax { line: 2, .. }), "{err:?}");
        let err = parse_strategy("init 40%; bogus 3").unwrap_err();
        assert_eq!(
            err,
            DslError::Syntax {
                line: 1,
                column: 11,
                message: "unknown clause `bogus`".into()
            }
        );
        assert!(matches!(
            parse_strategy("init 40% later t1"),
            Err(DslError::Syntax { line: 1, column: 10, .. })
        ));
    }

    #[test]
    fn depth_limits() {
        assert!(matches!(
            parse_strategy("init 10%; later wavg(1, 1, 1, 1)"),
            Err(DslError::Semantic(_))
        ));
        assert!(matches!(
            parse_strategy("init 10%; when t4 > 0 then add 1%"),
            Err(DslError::Semantic(_))
        ));
        assert!(parse_strategy_with(
            "init 10%; later wavg(1, 1, 1, 1)",
            ParseOptions { max_trace_depth: 4 }
        )
        .is_ok());
    }

    #[test]
    fn full_feature_program() {
        let src = "init 62%; later wavg(76%, 19%, 5%) + 19%; cap 28% 89%;
                   when t1 < 24% then set max(47% - (24% - t1), 25%);
                   drift 0.8% every 7; jitter 2%; final 14% add 7%;
                   punish when any < 10% and mean < 30% spend 5%";
        let p = parse_strategy(src).unwrap();
        assert_eq!(p.threshold_rules.len(), 1);
        assert_eq!(p.periodic_drift, Some(Drift { delta: 0.008, every: 7 }));
        assert_eq!(p.jitter, 0.02);
        assert_eq!(p.final_rounds.len(), 1);
        assert!(p.punish_rule.is_some());
    }

    #[test]
    fn misc_semantic_errors() {
        for src in [
            "init 40%; init 50%",
            "later t1",
            "init 120%",
            "init 5%; cap 10% 20%",
            "init 5%; drift 1% every 0",
            "init 5%; punish when t1 < 1% spend 150%",
        ] {
            assert!(
                matches!(parse_strategy(src), Err(DslError::Semantic(_))),
                "{src}"
            );
        }
    }
}
