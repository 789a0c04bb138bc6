//! Closed-form scalar fields over a small expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' ['-'] integer)?
//! atom  := number | 'pi' | 'x' index | func '(' expr ')' | '(' expr ')'
//! func  := 'exp' | 'sin' | 'cos' | 'tanh'
//! ```
//!
//! Coordinates are written `x0, x1, …`. Expressions serialize as their
//! source text.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::autodiff::{jet_variable, Jet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Exp,
    Sin,
    Cos,
    Tanh,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Coord(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
}

/// Parsed closed-form expression in the coordinates `x0, x1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    src: String,
    node: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { s: src.as_bytes(), pos: 0 };
        let node = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr { src: src.to_string(), node })
    }

    pub fn constant(c: f64) -> Expr {
        Expr { src: format!("{c:?}"), node: Node::Num(c) }
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// Largest coordinate index used plus one (0 for constants).
    pub fn arity(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Num(_) => 0,
                Node::Coord(i) => i + 1,
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => walk(a).max(walk(b)),
                Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => walk(a),
            }
        }
        walk(&self.node)
    }

    /// Fail unless every coordinate exists in dimension `d1`.
    pub fn check_dim(&self, d1: usize) -> Result<()> {
        if self.arity() > d1 {
            return Err(Error::InvalidSpec(format!(
                "expression `{}` uses x{} but the domain has dimension {d1}",
                self.src,
                self.arity() - 1
            )));
        }
        Ok(())
    }

    pub fn is_constant_zero(&self) -> bool {
        self.node == Node::Num(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        fn ev(n: &Node, x: &[f64]) -> f64 {
            match n {
                Node::Num(c) => *c,
                Node::Coord(i) => x[*i],
                Node::Add(a, b) => ev(a, x) + ev(b, x),
                Node::Sub(a, b) => ev(a, x) - ev(b, x),
                Node::Mul(a, b) => ev(a, x) * ev(b, x),
                Node::Div(a, b) => ev(a, x) / ev(b, x),
                Node::Pow(a, k) => ev(a, x).powi(*k),
                Node::Neg(a) => -ev(a, x),
                Node::Call(f, a) => {
                    let v = ev(a, x);
                    match f {
                        Func::Exp => v.exp(),
                        Func::Sin => v.sin(),
                        Func::Cos => v.cos(),
                        Func::Tanh => v.tanh(),
                    }
                }
            }
        }
        ev(&self.node, x)
    }

    /// Exact jet of the expression at `x` up to `order`.
    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet<f64>> {
        fn ev(n: &Node, x: &[f64], order: usize) -> Result<Jet<f64>> {
            Ok(match n {
                Node::Num(c) => Jet::constant(*c, x, order)?,
                Node::Coord(i) => jet_variable(*i, x, order)?,
                Node::Add(a, b) => ev(a, x, order)?.add(&ev(b, x, order)?)?,
                Node::Sub(a, b) => ev(a, x, order)?.sub(&ev(b, x, order)?)?,
                Node::Mul(a, b) => ev(a, x, order)?.mul(&ev(b, x, order)?)?,
                Node::Div(a, b) => ev(a, x, order)?.mul(&ev(b, x, order)?.recip())?,
                Node::Pow(a, k) => {
                    let base = ev(a, x, order)?;
                    if *k >= 0 {
                        base.powi(*k as u32)
                    } else {
                        base.recip().powi(k.unsigned_abs())
                    }
                }
                Node::Neg(a) => ev(a, x, order)?.neg(),
                Node::Call(f, a) => {
                    let inner = ev(a, x, order)?;
                    match f {
                        Func::Exp => inner.exp(),
                        Func::Sin => inner.sin(),
                        Func::Cos => inner.cos(),
                        Func::Tanh => inner.tanh(),
                    }
                }
            })
        }
        if self.arity() > x.len() {
            return Err(Error::IndexOutOfRange { index: self.arity() - 1, dim: x.len() });
        }
        ev(&self.node, x, order)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.src)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Expr, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.err("expected an integer exponent"));
        }
        let k: i32 = digits.parse().map_err(|_| self.err("exponent out of range"))?;
        Ok(Node::Pow(Box::new(base), if neg { -k } else { k }))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                match name {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "x" => {
                        let d = self.digits();
                        if d.is_empty() {
                            self.pos = start;
                            return Err(self.err("coordinates are written x0, x1, ..."));
                        }
                        Ok(Node::Coord(d.parse().map_err(|_| self.err("coordinate index out of range"))?))
                    }
                    "exp" | "sin" | "cos" | "tanh" => {
                        let f = match name {
                            "exp" => Func::Exp,
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            _ => Func::Tanh,
                        };
                        if !self.eat(b'(') {
                            return Err(self.err("expected `(` after function name"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.err("expected `)`"));
                        }
                        Ok(Node::Call(f, Box::new(arg)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.err(&format!("unknown identifier `{name}`")))
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && (self.s[self.pos] == b'-' || self.s[self.pos] == b'+') {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Node::Num).map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }
}
