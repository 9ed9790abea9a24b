//! Small arithmetic expression language for field data in problem files.
//!
//! Grammar: numbers, variables `x1 … xn` and `t`, the constant `pi`,
//! binary `+ - * / ^` (`^` binds tightest and associates right), unary `-`,
//! parentheses and the functions `exp sin cos erf sqrt abs ln step`.

use std::fmt;
use std::str::FromStr;

use statrs::function::erf::erf;

use crate::error::{GreenError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Erf,
    Sqrt,
    Abs,
    Ln,
    /// Heaviside step, 1 for arguments ≥ 0.
    Step,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "exp" => Self::Exp,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "erf" => Self::Erf,
            "sqrt" => Self::Sqrt,
            "abs" => Self::Abs,
            "ln" => Self::Ln,
            "step" => Self::Step,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Exp => x.exp(),
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Erf => erf(x),
            Self::Sqrt => x.sqrt(),
            Self::Abs => x.abs(),
            Self::Ln => x.ln(),
            Self::Step => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based spatial coordinate index.
    Coord(usize),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Self::Num(v) => *v,
            Self::Coord(i) => x.get(*i).copied().unwrap_or(f64::NAN),
            Self::Time => t,
            Self::Neg(a) => -a.eval(x, t),
            Self::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Self::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Self::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Self::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Self::Pow(a, b) => {
                let base = a.eval(x, t);
                match **b {
                    Self::Num(e) if e == e.trunc() && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(x, t)),
                }
            }
            Self::Call(f, a) => f.apply(a.eval(x, t)),
        }
    }

    /// Number of spatial coordinates referenced (highest index + 1).
    pub fn arity(&self) -> usize {
        match self {
            Self::Num(_) | Self::Time => 0,
            Self::Coord(i) => i + 1,
            Self::Neg(a) | Self::Call(_, a) => a.arity(),
            Self::Add(a, b)
            | Self::Sub(a, b)
            | Self::Mul(a, b)
            | Self::Div(a, b)
            | Self::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Self::Time => true,
            Self::Num(_) | Self::Coord(_) => false,
            Self::Neg(a) | Self::Call(_, a) => a.uses_time(),
            Self::Add(a, b)
            | Self::Sub(a, b)
            | Self::Mul(a, b)
            | Self::Div(a, b)
            | Self::Pow(a, b) => a.uses_time() || b.uses_time(),
        }
    }

    /// The value if the expression does not depend on any variable.
    pub fn constant_value(&self) -> Option<f64> {
        if self.arity() == 0 && !self.uses_time() {
            Some(self.eval(&[], 0.0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let err = |reason: String| GreenError::Parse {
        input: src.to_string(),
        reason,
    };
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
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
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| err(format!("bad number `{text}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Token::RParen);
            i += 1;
        } else {
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, reason: impl Into<String>) -> GreenError {
        GreenError::Parse {
            input: self.src.to_string(),
            reason: reason.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(lhs.into(), rhs.into())
            } else {
                Expr::Sub(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(lhs.into(), rhs.into())
            } else {
                Expr::Div(lhs.into(), rhs.into())
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(self.unary()?.into()));
        }
        if let Some(Token::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(self.err("missing `)`")),
                }
            }
            Some(Token::Ident(name)) => {
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if name == "t" {
                    return Ok(Expr::Time);
                }
                if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if idx == 0 {
                        return Err(self.err("coordinates are numbered from x1"));
                    }
                    return Ok(Expr::Coord(idx - 1));
                }
                if let Some(f) = Func::from_name(&name) {
                    if self.next() != Some(Token::LParen) {
                        return Err(self.err(format!("`{name}` must be followed by `(`")));
                    }
                    let arg = self.expr()?;
                    if self.next() != Some(Token::RParen) {
                        return Err(self.err(format!("missing `)` after argument of `{name}`")));
                    }
                    return Ok(Expr::Call(f, arg.into()));
                }
                Err(self.err(format!("unknown identifier `{name}`")))
            }
            Some(tok) => Err(self.err(format!("unexpected token {tok:?}"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

impl FromStr for Expr {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        let mut p = Parser {
            src: s,
            tokens,
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Num(v) => write!(f, "{v}"),
            Self::Coord(i) => write!(f, "x{}", i + 1),
            Self::Time => write!(f, "t"),
            Self::Neg(a) => write!(f, "(-{a})"),
            Self::Add(a, b) => write!(f, "({a} + {b})"),
            Self::Sub(a, b) => write!(f, "({a} - {b})"),
            Self::Mul(a, b) => write!(f, "({a} * {b})"),
            Self::Div(a, b) => write!(f, "({a} / {b})"),
            Self::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Self::Call(func, a) => write!(f, "{}({a})", format!("{func:?}").to_lowercase()),
        }
    }
}
