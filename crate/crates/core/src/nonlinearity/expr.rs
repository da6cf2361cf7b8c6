//! Recursive-descent parser and evaluator for scalar expressions in `t` or `u`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | 't' | 'u' | func '(' args ')' | '(' expr ')'
//! func   := 'exp' | 'log' (one argument) | 'pow' (two arguments)
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u^2`
//! is `-(u^2)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{func}` takes {expected} argument(s), found {found}")]
    Arity { func: &'static str, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    T,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    Exp,
    Log,
    Pow,
}

impl Builtin {
    fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Builtin::Exp | Builtin::Log => 1,
            Builtin::Pow => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &lx.src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                })?;
                lx.toks.push((start, Tok::Num(v)));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((start, Tok::Ident(lx.src[start..i].to_string())));
            } else if "+-*/^(),".contains(c) {
                lx.toks.push((i, Tok::Op(c)));
                i += 1;
            } else {
                return Err(ParseError { pos: i, kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")) });
            }
        }
        lx.toks.push((bytes.len(), Tok::End));
        Ok(lx.toks)
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn pos(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].1.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "u" => Ok(Expr::Var(Var::U)),
                "exp" | "log" | "pow" => {
                    let f = match name.as_str() {
                        "exp" => Builtin::Exp,
                        "log" => Builtin::Log,
                        _ => Builtin::Pow,
                    };
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Op(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != f.arity() {
                        return Err(ParseError {
                            pos,
                            kind: ParseErrorKind::Arity { func: f.name(), expected: f.arity(), found: args.len() },
                        });
                    }
                    Ok(Expr::Call(f, args))
                }
                _ => Err(ParseError { pos, kind: ParseErrorKind::UnknownIdentifier(name) }),
            },
            Tok::End => Err(ParseError { pos, kind: ParseErrorKind::Syntax("unexpected end of input".into()) }),
            Tok::Op(c) => Err(ParseError { pos, kind: ParseErrorKind::Syntax(format!("unexpected `{c}`")) }),
        }
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("trailing input");
    }
    Ok(e)
}

/// A real number stored as `sign · e^ln`, so products of huge and tiny
/// factors (`e^{kt} · f(ε e^{-λ0 t})`) never overflow or underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNum {
    pub sign: f64,
    pub ln: f64,
}

impl LogNum {
    pub const ZERO: LogNum = LogNum { sign: 0.0, ln: f64::NEG_INFINITY };
    pub const NAN: LogNum = LogNum { sign: f64::NAN, ln: f64::NAN };

    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            Self::NAN
        } else if x == 0.0 {
            Self::ZERO
        } else {
            LogNum { sign: x.signum(), ln: x.abs().ln() }
        }
    }

    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogNum { sign: 1.0, ln }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    /// `ln` of the value, `-inf` at zero, NaN for negative values.
    pub fn ln_value(self) -> f64 {
        if self.sign > 0.0 {
            self.ln
        } else if self.sign == 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        }
    }

    fn is_nan(self) -> bool {
        self.sign.is_nan() || self.ln.is_nan()
    }

    fn mul(self, o: LogNum) -> LogNum {
        if self.is_nan() || o.is_nan() {
            return Self::NAN;
        }
        if self.sign == 0.0 || o.sign == 0.0 {
            return if self.ln == f64::INFINITY || o.ln == f64::INFINITY { Self::NAN } else { Self::ZERO };
        }
        LogNum { sign: self.sign * o.sign, ln: self.ln + o.ln }
    }

    fn div(self, o: LogNum) -> LogNum {
        if self.is_nan() || o.is_nan() || o.sign == 0.0 {
            return Self::NAN;
        }
        if self.sign == 0.0 {
            return Self::ZERO;
        }
        LogNum { sign: self.sign * o.sign, ln: self.ln - o.ln }
    }

    fn add(self, o: LogNum) -> LogNum {
        if self.is_nan() || o.is_nan() {
            return Self::NAN;
        }
        if self.sign == 0.0 {
            return o;
        }
        if o.sign == 0.0 {
            return self;
        }
        let (hi, lo) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        if hi.ln == f64::INFINITY {
            return if lo.ln == f64::INFINITY && lo.sign != hi.sign { Self::NAN } else { hi };
        }
        let r = (lo.ln - hi.ln).exp();
        if hi.sign == lo.sign {
            LogNum { sign: hi.sign, ln: hi.ln + r.ln_1p() }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            LogNum { sign: hi.sign, ln: hi.ln + (-r).ln_1p() }
        }
    }

    fn neg(self) -> LogNum {
        LogNum { sign: -self.sign, ln: self.ln }
    }

    fn pow(self, e: LogNum) -> LogNum {
        let p = e.to_f64();
        if self.is_nan() || p.is_nan() {
            return Self::NAN;
        }
        if p == 0.0 {
            return LogNum { sign: 1.0, ln: 0.0 };
        }
        if self.sign == 0.0 {
            return if p > 0.0 { Self::ZERO } else { LogNum { sign: 1.0, ln: f64::INFINITY } };
        }
        if self.sign > 0.0 {
            return LogNum { sign: 1.0, ln: p * self.ln };
        }
        if p.fract() == 0.0 {
            let sign = if (p / 2.0).fract() == 0.0 { 1.0 } else { -1.0 };
            return LogNum { sign, ln: p * self.ln };
        }
        Self::NAN
    }

    fn exp(self) -> LogNum {
        LogNum::from_ln(self.to_f64())
    }

    /// `e^x − 1` without cancellation for small `x`.
    fn exp_m1(self) -> LogNum {
        if self.is_nan() {
            return Self::NAN;
        }
        if self.sign == 0.0 {
            return Self::ZERO;
        }
        if self.ln < -20.0 {
            return self.mul(LogNum::from_f64(1.0 + 0.5 * self.to_f64()));
        }
        let v = self.to_f64();
        if v < 700.0 {
            LogNum::from_f64(v.exp_m1())
        } else {
            LogNum { sign: 1.0, ln: v + (-(-v).exp()).ln_1p() }
        }
    }

    fn log(self) -> LogNum {
        if self.sign > 0.0 {
            LogNum::from_f64(self.ln)
        } else {
            Self::NAN
        }
    }
}

/// The argument `x` when `a - b` has the form `exp(x) - 1`.
fn exp_minus_one_arg<'e>(a: &'e Expr, b: &Expr) -> Option<&'e Expr> {
    match (a, b) {
        (Expr::Call(Builtin::Exp, args), Expr::Num(one)) if *one == 1.0 => Some(&args[0]),
        _ => None,
    }
}

impl Expr {
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        match self {
            Expr::Bin(BinOp::Sub, a, b) if exp_minus_one_arg(a, b).is_some() => {
                exp_minus_one_arg(a, b).map_or(f64::NAN, |x| x.eval(t, u).exp_m1())
            }
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::U) => u,
            Expr::Neg(e) => -e.eval(t, u),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(t, u), b.eval(t, u));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
            Expr::Call(f, args) => match f {
                Builtin::Exp => args[0].eval(t, u).exp(),
                Builtin::Log => args[0].eval(t, u).ln(),
                Builtin::Pow => args[0].eval(t, u).powf(args[1].eval(t, u)),
            },
        }
    }

    /// Evaluates with `t` and `u` supplied in log-number form.
    pub fn eval_log(&self, t: LogNum, u: LogNum) -> LogNum {
        match self {
            Expr::Bin(BinOp::Sub, a, b) if exp_minus_one_arg(a, b).is_some() => {
                exp_minus_one_arg(a, b).map_or(LogNum::NAN, |x| x.eval_log(t, u).exp_m1())
            }
            Expr::Num(v) => LogNum::from_f64(*v),
            Expr::Var(Var::T) => t,
            Expr::Var(Var::U) => u,
            Expr::Neg(e) => e.eval_log(t, u).neg(),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_log(t, u), b.eval_log(t, u));
                match op {
                    BinOp::Add => x.add(y),
                    BinOp::Sub => x.add(y.neg()),
                    BinOp::Mul => x.mul(y),
                    BinOp::Div => x.div(y),
                    BinOp::Pow => x.pow(y),
                }
            }
            Expr::Call(f, args) => match f {
                Builtin::Exp => args[0].eval_log(t, u).exp(),
                Builtin::Log => args[0].eval_log(t, u).log(),
                Builtin::Pow => args[0].eval_log(t, u).pow(args[1].eval_log(t, u)),
            },
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::U) => f.write_str("u"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
