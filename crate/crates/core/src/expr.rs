//! A small expression language for real functions of one variable.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := number | "x" | "pi" | "e" | func "(" expr ")" | "(" expr ")"
//! func   := exp | log | sqrt | sin | cos | abs
//! ```
//!
//! `-x^2` therefore parses as `-(x^2)` and `2^3^2` as `2^(3^2)`.
//!
//! Evaluation is total: any step that leaves the reals (square root of a
//! negative, logarithm of a non-positive number, division by zero, a
//! non-integer power of a negative base, overflow) yields `None`, and `None`
//! propagates to the root.

use std::fmt;

use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> Option<f64> {
        let r = match self {
            Func::Exp => v.exp(),
            Func::Log if v <= 0.0 => return None,
            Func::Log => v.ln(),
            Func::Sqrt if v < 0.0 => return None,
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Abs => v.abs(),
        };
        finite(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn apply(self, l: f64, r: f64) -> Option<f64> {
        let v = match self {
            BinOp::Add => l + r,
            BinOp::Sub => l - r,
            BinOp::Mul => l * r,
            BinOp::Div if r == 0.0 => return None,
            BinOp::Div => l / r,
            BinOp::Pow => {
                if l < 0.0 && r.fract() != 0.0 {
                    return None;
                }
                if l == 0.0 && r < 0.0 {
                    return None;
                }
                l.powf(r)
            }
        };
        finite(v)
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Expression tree over the single variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Pi,
    E,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        parse(source)
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    /// Evaluates at `x`; `None` means the value is undefined over the reals.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Expr::Const(c) => finite(*c),
            Expr::Var => finite(x),
            Expr::Pi => Some(std::f64::consts::PI),
            Expr::E => Some(std::f64::consts::E),
            Expr::Neg(e) => e.eval(x).map(|v| -v),
            Expr::Call(f, e) => f.apply(e.eval(x)?),
            Expr::Binary(op, l, r) => op.apply(l.eval(x)?, r.eval(x)?),
        }
    }

    /// Elementwise [`Expr::eval`], order preserved.
    pub fn eval_batch(&self, xs: &[f64]) -> Vec<Option<f64>> {
        #[cfg(feature = "parallel")]
        {
            xs.par_iter().map(|&x| self.eval(x)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            xs.iter().map(|&x| self.eval(x)).collect()
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var | Expr::Pi | Expr::E => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => f.write_str("x"),
            Expr::Pi => f.write_str("pi"),
            Expr::E => f.write_str("e"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_at(f, 3)
            }
            Expr::Call(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_at(f, 0)?;
                f.write_str(")")
            }
            Expr::Binary(BinOp::Pow, l, r) => {
                l.fmt_at(f, 5)?;
                f.write_str("^")?;
                r.fmt_at(f, 3)
            }
            Expr::Binary(op, l, r) => {
                let p = self.precedence();
                l.fmt_at(f, p)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_at(f, p + 1)
            }
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;

    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: expected {}", .expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
    #[error("number at offset {offset} is out of range")]
    NumberOutOfRange { offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(start) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let int = self.digits();
            let mut frac = 0;
            if self.src.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                frac = self.digits();
            }
            if int + frac == 0 {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["digit"],
                });
            }
            if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if self.digits() == 0 {
                    self.pos = save;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number"],
            })?;
            if !v.is_finite() {
                return Err(ParseError::NumberOutOfRange { offset: start });
            }
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return Ok((Tok::Ident(name.to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            expected: vec!["number", "identifier", "operator", "parenthesis"],
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
}

const ATOM_START: &[&str] = &["number", "x", "pi", "e", "function", "(", "-"];

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn expect_sym(&mut self, sym: u8, label: &'static str) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(sym) {
            self.bump()
        } else {
            Err(ParseError::Syntax {
                offset: self.offset,
                expected: vec![label],
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'+') => BinOp::Add,
                Tok::Sym(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Sym(b'*') => BinOp::Mul,
                Tok::Sym(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            lhs = Expr::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym(b'-') {
            self.bump()?;
            return Ok(-self.factor()?);
        }
        let base = self.atom()?;
        if self.tok == Tok::Sym(b'^') {
            self.bump()?;
            return Ok(Expr::binary(BinOp::Pow, base, self.factor()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Ident(name) => {
                self.bump()?;
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Pi),
                    "e" => Ok(Expr::E),
                    other => match Func::from_name(other) {
                        Some(func) => {
                            self.expect_sym(b'(', "(")?;
                            let arg = self.expr()?;
                            self.expect_sym(b')', ")")?;
                            Ok(Expr::call(func, arg))
                        }
                        None => Err(ParseError::UnknownIdent { offset, name }),
                    },
                }
            }
            Tok::Sym(b'(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_sym(b')', ")")?;
                Ok(inner)
            }
            _ => Err(ParseError::Syntax {
                offset,
                expected: ATOM_START.to_vec(),
            }),
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        lexer: Lexer {
            src: source.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        offset: 0,
    };
    parser.bump()?;
    let e = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(ParseError::Syntax {
            offset: parser.offset,
            expected: vec!["operator", "end of input"],
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("interval endpoints must be finite with a < b (got [{a}, {b}])")]
    BadInterval { a: f64, b: f64 },
    #[error("`{expr}` is undefined at the endpoint x = {x}")]
    UndefinedAtEndpoint { expr: String, x: f64 },
}

/// Closed interval `[a, b]` with finite `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Interval, DomainError> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Interval { a, b })
        } else {
            Err(DomainError::BadInterval { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.a, self.b)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// `n` evenly spaced points including both endpoints (`n >= 2`).
    pub fn grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.b
                } else {
                    self.a + self.width() * (i as f64 / last)
                }
            })
            .collect()
    }
}

/// A function `f` together with the interval it is studied on.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    expr: Expr,
    domain: Interval,
}

impl FunctionSpec {
    pub fn new(expr: Expr, domain: Interval) -> Result<FunctionSpec, DomainError> {
        for x in [domain.a, domain.b] {
            if expr.eval(x).is_none() {
                return Err(DomainError::UndefinedAtEndpoint {
                    expr: expr.to_string(),
                    x,
                });
            }
        }
        Ok(FunctionSpec { expr, domain })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn eval(&self, x: f64) -> Option<f64> {
        self.expr.eval(x)
    }

    /// Value at an endpoint; defined by construction.
    pub fn at_a(&self) -> f64 {
        self.expr
            .eval(self.domain.a)
            .expect("checked at construction")
    }

    pub fn at_b(&self) -> f64 {
        self.expr
            .eval(self.domain.b)
            .expect("checked at construction")
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Parses `source` and attaches the interval `[a, b]`.
pub fn function(source: &str, a: f64, b: f64) -> Result<FunctionSpec, SpecError> {
    let expr = parse(source)?;
    Ok(FunctionSpec::new(expr, Interval::new(a, b)?)?)
}
