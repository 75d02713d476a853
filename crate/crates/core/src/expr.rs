//! Arithmetic expressions for inline problem definitions, with symbolic derivatives.
//!
//! Grammar: numbers, `+ - * / ^`, parentheses, unary minus, the functions
//! `abs sqrt sin cos exp`, and the variables `x1..xn`, `xi1 xi2`, `eta1 eta2`.
//! `^` is right-associative and binds tighter than unary minus (`-x1^2 = -(x1^2)`).

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Point2;
use crate::model::{ConstraintMap, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// x_{k+1}
    X(usize),
    /// ξ_{k+1}
    Xi(usize),
    /// η_{k+1}
    Eta(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
    // Only produced by differentiation.
    Ln,
    Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable values for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub xi: Point2,
    pub eta: Point2,
}

impl<'a> Env<'a> {
    pub fn x(x: &'a [f64]) -> Self {
        Self { x, ..Default::default() }
    }

    pub fn xi(xi: Point2) -> Self {
        Self { xi, ..Default::default() }
    }
}

fn err(src: &str, pos: usize, msg: &str) -> Error {
    Error::Config(format!("expression `{src}`, column {}: {msg}", pos + 1))
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(err(self.src, self.pos, &format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            None => Err(err(self.src, start, "unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.') {
                    self.pos += 1;
                }
                if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
                    let save = self.pos;
                    self.pos += 1;
                    if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                        self.pos += 1;
                    }
                    let digits = self.pos;
                    while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    if self.pos == digits {
                        self.pos = save;
                    }
                }
                let text = &self.src[start..self.pos];
                text.parse::<f64>().map(Expr::Num).map_err(|_| err(self.src, start, &format!("bad number `{text}`")))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                let func = match name {
                    "abs" => Some(Func::Abs),
                    "sqrt" => Some(Func::Sqrt),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(f) = func {
                    self.expect(b'(')?;
                    let arg = self.sum()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                parse_var(name).map(Expr::Var).ok_or_else(|| err(self.src, start, &format!("unknown name `{name}`")))
            }
            Some(c) => Err(err(self.src, self.pos, &format!("unexpected `{}`", c as char))),
        }
    }
}

fn parse_var(name: &str) -> Option<Var> {
    let index = |rest: &str| -> Option<usize> {
        let k: usize = rest.parse().ok()?;
        (k >= 1 && !rest.starts_with('0')).then(|| k - 1)
    };
    if let Some(rest) = name.strip_prefix("xi") {
        return index(rest).filter(|k| *k < 2).map(Var::Xi);
    }
    if let Some(rest) = name.strip_prefix("eta") {
        return index(rest).filter(|k| *k < 2).map(Var::Eta);
    }
    name.strip_prefix('x').and_then(index).map(Var::X)
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x + y),
        (Expr::Num(z), e) | (e, Expr::Num(z)) if z == 0.0 => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x - y),
        (e, Expr::Num(z)) if z == 0.0 => e,
        (Expr::Num(z), e) if z == 0.0 => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if z == 0.0 => num(0.0),
        (Expr::Num(o), e) | (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(z), _) if z == 0.0 => num(0.0),
        (e, Expr::Num(o)) if o == 1.0 => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(-x),
        Expr::Neg(e) => *e,
        e => Expr::Neg(Box::new(e)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
        let e = p.sum()?;
        if p.peek().is_some() {
            return Err(err(src, p.pos, "trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, env: &Env<'_>) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X(k)) => env.x.get(*k).copied().unwrap_or(f64::NAN),
            Expr::Var(Var::Xi(k)) => env.xi[*k],
            Expr::Var(Var::Eta(k)) => env.eta[*k],
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, b) => {
                let (x, y) = (a.eval(env), b.eval(env));
                if y.fract() == 0.0 && y.abs() < 64.0 {
                    x.powi(y as i32)
                } else {
                    x.powf(y)
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(env);
                match f {
                    Func::Abs => x.abs(),
                    Func::Sqrt => x.sqrt(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sign => {
                        if x > 0.0 {
                            1.0
                        } else if x < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// All variables occurring in the expression.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Fails unless every variable is one of `allowed`.
    pub fn check_variables(&self, allowed: impl Fn(Var) -> bool, context: &str) -> Result<()> {
        match self.variables().into_iter().find(|v| !allowed(*v)) {
            Some(v) => Err(Error::Config(format!("{context}: variable `{v}` is not available here"))),
            None => Ok(()),
        }
    }

    /// Symbolic partial derivative.
    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Expr::Div(a, b) => div(
                sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
                Expr::Pow(b.clone(), Box::new(num(2.0))),
            ),
            Expr::Pow(a, b) => {
                if b.is_constant() {
                    let c = b.eval(&Env::default());
                    mul(mul(num(c), Expr::Pow(a.clone(), Box::new(num(c - 1.0)))), a.diff(v))
                } else {
                    // d(a^b) = a^b (b′ ln a + b a′/a)
                    let term = add(
                        mul(b.diff(v), call(Func::Ln, (**a).clone())),
                        div(mul((**b).clone(), a.diff(v)), (**a).clone()),
                    );
                    mul(self.clone(), term)
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                let inner = (**a).clone();
                let outer = match f {
                    Func::Abs => call(Func::Sign, inner),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, inner)),
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Ln => div(num(1.0), inner),
                    Func::Sign => num(0.0),
                };
                mul(outer, da)
            }
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x{}", k + 1),
            Var::Xi(k) => write!(f, "xi{}", k + 1),
            Var::Eta(k) => write!(f, "eta{}", k + 1),
        }
    }
}

/// J(x) given by an expression in x1..xn, with symbolic gradient and Hessian.
#[derive(Debug, Clone)]
pub struct ExprObjective {
    dim: usize,
    value: Expr,
    gradient: Vec<Expr>,
    hessian: Vec<Vec<Expr>>,
}

impl ExprObjective {
    pub fn new(dim: usize, src: &str) -> Result<Self> {
        let value = Expr::parse(src)?;
        value.check_variables(|v| matches!(v, Var::X(k) if k < dim), "objective")?;
        let gradient: Vec<Expr> = (0..dim).map(|i| value.diff(Var::X(i))).collect();
        let hessian = gradient.iter().map(|g| (0..dim).map(|j| g.diff(Var::X(j))).collect()).collect();
        Ok(Self { dim, value, gradient, hessian })
    }
}

impl Objective for ExprObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value.eval(&Env::x(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let env = Env::x(x);
        self.gradient.iter().map(|g| g.eval(&env)).collect()
    }

    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let env = Env::x(x);
        let mut s = 0.0;
        for (i, row) in self.hessian.iter().enumerate() {
            if a[i] == 0.0 {
                continue;
            }
            for (j, h) in row.iter().enumerate() {
                if b[j] != 0.0 {
                    s += a[i] * h.eval(&env) * b[j];
                }
            }
        }
        s
    }
}

/// G: Rⁿ → Rᵐ given by one expression per component.
#[derive(Debug, Clone)]
pub struct ExprConstraintMap {
    components: Vec<ExprObjective>,
}

impl ExprConstraintMap {
    pub fn new(dim: usize, srcs: &[String]) -> Result<Self> {
        if srcs.is_empty() {
            return Err(Error::Config("constraint map needs at least one component".into()));
        }
        let components = srcs.iter().map(|s| ExprObjective::new(dim, s)).collect::<Result<_>>()?;
        Ok(Self { components })
    }
}

impl ConstraintMap for ExprConstraintMap {
    fn dim_in(&self) -> usize {
        self.components[0].dim
    }

    fn dim_out(&self) -> usize {
        self.components.len()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value(x)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.gradient(x)).collect()
    }

    fn hessian_form(&self, x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.hessian_form(x, a, b)).collect()
    }
}
