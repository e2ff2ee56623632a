//! A small arithmetic expression language for coordinate fields and Ψ profiles.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `exp`, `ln` (alias `log`), `sqrt`, `abs`, `sin`, `cos`, `pow(a, b)`.
//! Constants: `pi`, `e`. Any other identifier is a variable (`x0`..`x7`, `s`, `bnorm`, …).
//! Trees evaluate over any [`Real`] and differentiate symbolically.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        Parser::new(src).parse_all()
    }

    pub fn num(x: f64) -> Self {
        Num(x)
    }

    pub fn var(name: &str) -> Self {
        Var(name.to_string())
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Num(x) => Some(*x),
            _ => None,
        }
    }

    /// Names of all free variables.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Num(_) => {}
            Var(v) => {
                out.insert(v.clone());
            }
            Neg(a) | Call(_, a) => a.collect_vars(out),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Num(_) => false,
            Var(v) => v == var,
            Neg(a) | Call(_, a) => a.depends_on(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Evaluates with variables looked up in `env`; non-finite results are errors.
    pub fn eval<T: Real>(&self, env: &[(&str, T)]) -> Result<T> {
        let v = self.eval_raw(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(f64::NAN, format!("expression `{self}` is not finite")))
        }
    }

    fn eval_raw<T: Real>(&self, env: &[(&str, T)]) -> Result<T> {
        Ok(match self {
            Num(x) => T::lit(*x),
            Var(name) => env
                .iter()
                .find(|(k, _)| k == name)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Neg(a) => -a.eval_raw(env)?,
            Add(a, b) => a.eval_raw(env)? + b.eval_raw(env)?,
            Sub(a, b) => a.eval_raw(env)? - b.eval_raw(env)?,
            Mul(a, b) => a.eval_raw(env)? * b.eval_raw(env)?,
            Div(a, b) => a.eval_raw(env)? / b.eval_raw(env)?,
            Pow(a, b) => {
                let base = a.eval_raw(env)?;
                match b.as_const() {
                    Some(p) if p.fract() == 0.0 && p.abs() < 64.0 => base.powi(p as i32),
                    Some(p) => base.powf(T::lit(p)),
                    None => base.powf(b.eval_raw(env)?),
                }
            }
            Call(f, a) => {
                let x = a.eval_raw(env)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        })
    }

    /// Replaces every occurrence of `var` by the constant `value`.
    pub fn substitute(&self, var: &str, value: f64) -> Self {
        self.substitute_expr(var, &Num(value)).simplify()
    }

    fn substitute_expr(&self, var: &str, with: &Expr) -> Self {
        match self {
            Var(v) if v == var => with.clone(),
            Num(_) | Var(_) => self.clone(),
            Neg(a) => Neg(Box::new(a.substitute_expr(var, with))),
            Call(f, a) => Call(*f, Box::new(a.substitute_expr(var, with))),
            Add(a, b) => Add(Box::new(a.substitute_expr(var, with)), Box::new(b.substitute_expr(var, with))),
            Sub(a, b) => Sub(Box::new(a.substitute_expr(var, with)), Box::new(b.substitute_expr(var, with))),
            Mul(a, b) => Mul(Box::new(a.substitute_expr(var, with)), Box::new(b.substitute_expr(var, with))),
            Div(a, b) => Div(Box::new(a.substitute_expr(var, with)), Box::new(b.substitute_expr(var, with))),
            Pow(a, b) => Pow(Box::new(a.substitute_expr(var, with)), Box::new(b.substitute_expr(var, with))),
        }
    }

    /// Symbolic partial derivative with light simplification.
    pub fn diff(&self, var: &str) -> Self {
        self.diff_raw(var).simplify()
    }

    fn diff_raw(&self, var: &str) -> Self {
        if !self.depends_on(var) {
            return Num(0.0);
        }
        let b = |e: Expr| Box::new(e);
        match self {
            Num(_) => Num(0.0),
            Var(v) => Num(if v == var { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.diff_raw(var))),
            Add(x, y) => Add(b(x.diff_raw(var)), b(y.diff_raw(var))),
            Sub(x, y) => Sub(b(x.diff_raw(var)), b(y.diff_raw(var))),
            Mul(x, y) => Add(
                b(Mul(b(x.diff_raw(var)), y.clone())),
                b(Mul(x.clone(), b(y.diff_raw(var)))),
            ),
            Div(x, y) => Div(
                b(Sub(
                    b(Mul(b(x.diff_raw(var)), y.clone())),
                    b(Mul(x.clone(), b(y.diff_raw(var)))),
                )),
                b(Pow(y.clone(), b(Num(2.0)))),
            ),
            Pow(x, y) if !y.depends_on(var) => Mul(
                b(Mul(y.clone(), b(Pow(x.clone(), b(Sub(y.clone(), b(Num(1.0)))))))),
                b(x.diff_raw(var)),
            ),
            Pow(x, y) => {
                // d(x^y) = x^y (y' ln x + y x'/x)
                Mul(
                    b(self.clone()),
                    b(Add(
                        b(Mul(b(y.diff_raw(var)), b(Call(Func::Ln, x.clone())))),
                        b(Div(b(Mul(y.clone(), b(x.diff_raw(var)))), x.clone())),
                    )),
                )
            }
            Call(f, a) => {
                let inner = a.diff_raw(var);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Ln => Div(b(Num(1.0)), a.clone()),
                    Func::Sqrt => Div(b(Num(0.5)), b(self.clone())),
                    Func::Abs => Div(a.clone(), b(self.clone())),
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(b(Call(Func::Sin, a.clone()))),
                };
                Mul(b(outer), b(inner))
            }
        }
    }

    /// Constant folding plus the 0/1 identities.
    pub fn simplify(&self) -> Self {
        let b = |e: Expr| Box::new(e);
        match self {
            Num(_) | Var(_) => self.clone(),
            Neg(a) => match a.simplify() {
                Num(x) => Num(-x),
                Neg(inner) => *inner,
                s => Neg(b(s)),
            },
            Add(x, y) => match (x.simplify(), y.simplify()) {
                (Num(p), Num(q)) => Num(p + q),
                (Num(0.0), e) | (e, Num(0.0)) => e,
                (p, q) => Add(b(p), b(q)),
            },
            Sub(x, y) => match (x.simplify(), y.simplify()) {
                (Num(p), Num(q)) => Num(p - q),
                (e, Num(0.0)) => e,
                (Num(0.0), e) => Neg(b(e)).simplify(),
                (p, q) => Sub(b(p), b(q)),
            },
            Mul(x, y) => match (x.simplify(), y.simplify()) {
                (Num(p), Num(q)) => Num(p * q),
                (Num(0.0), _) | (_, Num(0.0)) => Num(0.0),
                (Num(1.0), e) | (e, Num(1.0)) => e,
                (p, q) => Mul(b(p), b(q)),
            },
            Div(x, y) => match (x.simplify(), y.simplify()) {
                (Num(p), Num(q)) if q != 0.0 => Num(p / q),
                (Num(0.0), _) => Num(0.0),
                (e, Num(1.0)) => e,
                (p, q) => Div(b(p), b(q)),
            },
            Pow(x, y) => match (x.simplify(), y.simplify()) {
                (Num(p), Num(q)) if p > 0.0 || q.fract() == 0.0 => Num(p.powf(q)),
                (_, Num(0.0)) => Num(1.0),
                (e, Num(1.0)) => e,
                (p, q) => Pow(b(p), b(q)),
            },
            Call(f, a) => match (f, a.simplify()) {
                (Func::Exp, Num(x)) => Num(x.exp()),
                (Func::Ln, Num(x)) if x > 0.0 => Num(x.ln()),
                (Func::Sqrt, Num(x)) if x >= 0.0 => Num(x.sqrt()),
                (Func::Abs, Num(x)) => Num(x.abs()),
                (Func::Sin, Num(x)) => Num(x.sin()),
                (Func::Cos, Num(x)) => Num(x.cos()),
                (f, s) => Call(*f, b(s)),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 3,
            Pow(..) => 4,
            Num(x) if *x < 0.0 => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |e: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Num(x) => write!(f, "{x:?}"),
            Var(v) => write!(f, "{v}"),
            Neg(a) => {
                write!(f, "-")?;
                wrap(a, 4, f)
            }
            Add(a, b) => {
                wrap(a, 1, f)?;
                write!(f, " + ")?;
                wrap(b, 2, f)
            }
            Sub(a, b) => {
                wrap(a, 1, f)?;
                write!(f, " - ")?;
                wrap(b, 2, f)
            }
            Mul(a, b) => {
                wrap(a, 2, f)?;
                write!(f, "*")?;
                wrap(b, 3, f)
            }
            Div(a, b) => {
                wrap(a, 2, f)?;
                write!(f, "/")?;
                wrap(b, 4, f)
            }
            Pow(a, b) => {
                wrap(a, 5, f)?;
                write!(f, "^")?;
                wrap(b, 4, f)
            }
            Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Num(x)),
            Raw::Text(t) => Expr::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0, tok: Tok::End, tok_start: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::ParseError { position: self.tok_start, message: message.into() })
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let text = &self.src[start..self.pos];
            match text.parse::<f64>() {
                Ok(x) => self.tok = Tok::Num(x),
                Err(_) => return self.err(format!("malformed number `{text}`")),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Op(c as char);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return self.err(format!("unexpected character `{ch}`"));
        }
        Ok(())
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.tok == Tok::Op(op) {
            self.advance()
        } else {
            self.err(format!("expected `{op}`"))
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        self.advance()?;
        if self.tok == Tok::End {
            return self.err("empty expression");
        }
        let e = self.expr()?;
        if self.tok != Tok::End {
            return self.err("unexpected trailing input");
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.advance()?;
                    lhs = Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.advance()?;
                    lhs = Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.advance()?;
                    lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.advance()?;
                    lhs = Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.tok == Tok::Op('+') {
            self.advance()?;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let exp = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(x) => {
                self.advance()?;
                Ok(Num(x))
            }
            Tok::Ident(name) => {
                self.advance()?;
                if self.tok == Tok::Op('(') {
                    self.advance()?;
                    let mut args = vec![self.expr()?];
                    while self.tok == Tok::Op(',') {
                        self.advance()?;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if name == "pow" {
                        if args.len() != 2 {
                            return self.err("pow takes two arguments");
                        }
                        let e = args.pop().unwrap();
                        let b = args.pop().unwrap();
                        return Ok(Pow(Box::new(b), Box::new(e)));
                    }
                    let Some(f) = Func::lookup(&name) else {
                        return self.err(format!("unknown function `{name}`"));
                    };
                    if args.len() != 1 {
                        return self.err(format!("{name} takes one argument"));
                    }
                    Ok(Call(f, Box::new(args.pop().unwrap())))
                } else {
                    Ok(match name.as_str() {
                        "pi" => Num(std::f64::consts::PI),
                        "e" => Num(std::f64::consts::E),
                        _ => Var(name),
                    })
                }
            }
            Tok::Op('(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::End => self.err("unexpected end of input"),
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}
