//! Expression trees for field components, potentials, Lagrangians and Hamiltonians.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' atom)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')' | '-' atom
//! ```
//!
//! Identifiers are phase variables (`Q1..Qd` plus `P1..Pd` or `V1..Vd`
//! depending on the context) or named constants. Constants are resolved to
//! their value at parse time. Functions: `sin cos exp log sqrt`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, ParseError, ParseErrorKind, Position, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Named constant, already bound to its value.
    Const(String, f64),
    /// Phase variable: `index` into the flat state `(Q1..Qd, P1..Pd)`.
    Var(usize, String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Which identifiers an expression may use.
#[derive(Debug, Clone)]
pub struct ParseContext<'a> {
    pub dim: usize,
    /// Letter of the second variable family: `'P'` for phase space, `'V'` for velocities.
    pub second: char,
    pub constants: &'a BTreeMap<String, f64>,
    /// Line reported in error positions.
    pub line: usize,
}

impl<'a> ParseContext<'a> {
    pub fn phase(dim: usize, constants: &'a BTreeMap<String, f64>) -> Self {
        Self {
            dim,
            second: 'P',
            constants,
            line: 1,
        }
    }

    pub fn velocity(dim: usize, constants: &'a BTreeMap<String, f64>) -> Self {
        Self {
            dim,
            second: 'V',
            constants,
            line: 1,
        }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }

    fn resolve(&self, name: &str) -> Option<Expr> {
        if let Some(&v) = self.constants.get(name) {
            return Some(Expr::Const(name.to_string(), v));
        }
        let mut chars = name.chars();
        let family = chars.next()?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
            return None;
        }
        let i: usize = digits.parse().ok()?;
        if i == 0 || i > self.dim {
            return None;
        }
        if family == 'Q' {
            Some(Expr::Var(i - 1, name.to_string()))
        } else if family == self.second {
            Some(Expr::Var(self.dim + i - 1, name.to_string()))
        } else {
            None
        }
    }
}

impl Expr {
    pub fn parse(src: &str, ctx: &ParseContext<'_>) -> Result<Expr> {
        let tokens = tokenize(src, ctx.line)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            ctx,
            end: Position {
                line: ctx.line,
                col: src.chars().count() + 1,
            },
        };
        let e = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(parser
                .error_at(
                    tok.pos,
                    ParseErrorKind::Syntax(format!("unexpected {}", tok.kind.describe())),
                )
                .into());
        }
        Ok(e)
    }

    /// Evaluates at the flat state `x`. Any non-finite intermediate is a domain error.
    pub fn eval(&self, x: &[f64]) -> std::result::Result<f64, String> {
        let v = match self {
            Expr::Num(v) | Expr::Const(_, v) => *v,
            Expr::Var(i, _) => x[*i],
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(format!("division by zero in `{self}`"));
                }
                a.eval(x)? / den
            }
            Expr::Pow(a, b) => {
                let base = a.eval(x)?;
                let exp = b.eval(x)?;
                if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
                    base.powi(exp as i32)
                } else if base < 0.0 {
                    return Err(format!("negative base {base} to non-integer power in `{self}`"));
                } else {
                    base.powf(exp)
                }
            }
            Expr::Call(f, a) => {
                let arg = a.eval(x)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Exp => arg.exp(),
                    Func::Log => {
                        if arg <= 0.0 {
                            return Err(format!("log of non-positive value {arg}"));
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(format!("sqrt of negative value {arg}"));
                        }
                        arg.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value in `{self}`"))
        }
    }

    /// True if no phase variable occurs.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(..) => true,
            Expr::Var(..) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Symbolic partial derivative with respect to state variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(..) => Expr::Num(0.0),
            Expr::Var(i, _) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var)));
                div(num, pow((**b).clone(), Expr::Num(2.0)))
            }
            Expr::Pow(a, b) => {
                if b.is_constant() {
                    // n a^(n-1) a'
                    let n = (**b).clone();
                    let n_minus_one = match n.as_num() {
                        Some(v) => Expr::Num(v - 1.0),
                        None => sub(n.clone(), Expr::Num(1.0)),
                    };
                    mul(mul(n, pow((**a).clone(), n_minus_one)), a.diff(var))
                } else {
                    // a^b (b' log a + b a' / a)
                    let term = add(
                        mul(b.diff(var), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                    );
                    mul(self.clone(), term)
                }
            }
            Expr::Call(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => self.clone(),
                    Func::Log => div(Expr::Num(1.0), (**a).clone()),
                    Func::Sqrt => div(Expr::Num(0.5), self.clone()),
                };
                mul(outer, inner)
            }
        }
    }

    /// Gradient over the first `n` state variables.
    pub fn gradient(&self, n: usize) -> Vec<Expr> {
        (0..n).map(|i| self.diff(i)).collect()
    }
}

// Smart constructors with light constant folding.

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(0.0), _) => Expr::Num(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    match b.as_num() {
        Some(0.0) => Expr::Num(1.0),
        Some(1.0) => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Const(name, _) | Expr::Var(_, name) => write!(f, "{name}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Pow(a, b) => write!(f, "({a})^({b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: Position,
}

fn tokenize(src: &str, line: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, col: i + 1 };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(TokenKind::Plus),
            '-' => Some(TokenKind::Minus),
            '*' => Some(TokenKind::Star),
            '/' => Some(TokenKind::Slash),
            '^' => Some(TokenKind::Caret),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            ',' => Some(TokenKind::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token { kind, pos });
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| ParseError {
                pos,
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
            })?;
            tokens.push(Token {
                kind: TokenKind::Number(v),
                pos,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(chars[start..i].iter().collect()),
                pos,
            });
        } else {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
            }
            .into());
        }
    }
    Ok(tokens)
}

struct Parser<'c, 'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'c ParseContext<'a>,
    end: Position,
}

impl Parser<'_, '_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error_at(&self, pos: Position, kind: ParseErrorKind) -> ParseError {
        ParseError { pos, kind }
    }

    fn here(&self) -> Position {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map(|t| t.kind.describe())
                .unwrap_or_else(|| "end of input".into());
            Err(self
                .error_at(
                    self.here(),
                    ParseErrorKind::Syntax(format!("expected {}, found {found}", kind.describe())),
                )
                .into())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exp = self.atom()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.here();
        let Some(tok) = self.next() else {
            return Err(self
                .error_at(pos, ParseErrorKind::Syntax("unexpected end of input".into()))
                .into());
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Num(v)),
            TokenKind::Minus => Ok(Expr::Neg(Box::new(self.atom()?))),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(TokenKind::LParen)?;
                    let mut args = vec![self.expr()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(TokenKind::RParen)?;
                    if args.len() != 1 {
                        return Err(self
                            .error_at(
                                tok.pos,
                                ParseErrorKind::Arity {
                                    func: name,
                                    got: args.len(),
                                },
                            )
                            .into());
                    }
                    Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
                } else {
                    self.ctx
                        .resolve(&name)
                        .ok_or_else(|| Error::from(self.error_at(tok.pos, ParseErrorKind::UnknownIdentifier(name))))
                }
            }
            other => Err(self
                .error_at(
                    tok.pos,
                    ParseErrorKind::Syntax(format!("unexpected {}", other.describe())),
                )
                .into()),
        }
    }
}
