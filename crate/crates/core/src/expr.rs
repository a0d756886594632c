//! A small exact expression language used for projection formulas and
//! coboundary potentials.
//!
//! Grammar: `expr := term (('+'|'-') term)*`, `term := factor (('*'|'/') factor)*`,
//! `factor := '-' factor | number | ident | '(' expr ')' | 'floor' '(' expr ')'`.
//! Numbers are integers or `p/q` literals written without spaces, e.g. `2/5`.
//! Identifiers are looked up in a binding table; `ε`/`δ` are accepted as
//! aliases of `eps`/`delta`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{fmt_q, parse_q, Q};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Q),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Floor(Box<Expr>),
}

pub type Bindings = BTreeMap<String, Q>;

fn canonical_ident(s: &str) -> &str {
    match s {
        "ε" | "epsilon" => "eps",
        "δ" => "delta",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            // a rational literal is digits '/' digits with no spaces
            if i + 1 < chars.len() && chars[i] == '/' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                Ok(Expr::Num(parse_q(&s)?))
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                if id == "floor" {
                    if !self.eat_op('(') {
                        return Err(Error::Expression("floor needs '('".into()));
                    }
                    let inner = self.expr()?;
                    if !self.eat_op(')') {
                        return Err(Error::Expression("missing ')'".into()));
                    }
                    Ok(Expr::Floor(Box::new(inner)))
                } else {
                    Ok(Expr::Var(canonical_ident(&id).to_string()))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat_op(')') {
                    return Err(Error::Expression("missing ')'".into()));
                }
                Ok(inner)
            }
            other => Err(Error::Expression(format!("unexpected token {other:?}"))),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { toks: tokenize(src)?, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expression(format!("trailing input in {src:?}")));
        }
        Ok(e)
    }

    pub fn eval(&self, env: &Bindings) -> Result<Q> {
        Ok(match self {
            Expr::Num(x) => x.clone(),
            Expr::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| Error::Expression(format!("unbound variable {v}")))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d.is_zero() {
                    return Err(Error::Expression("division by zero".into()));
                }
                a.eval(env)? / d
            }
            Expr::Floor(a) => a.eval(env)?.floor(),
        })
    }

    /// Replaces every variable bound in `env` by its value.
    pub fn substitute(&self, env: &Bindings) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(env));
        match self {
            Expr::Var(v) => env.get(v).map(|x| Expr::Num(x.clone())).unwrap_or_else(|| self.clone()),
            Expr::Num(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Floor(a) => Expr::Floor(s(a)),
        }
    }

    fn mentions(&self, vars: &[&str]) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => vars.contains(&v.as_str()),
            Expr::Neg(a) | Expr::Floor(a) => a.mentions(vars),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.mentions(vars) || b.mentions(vars)
            }
        }
    }

    /// Syntactic check that the expression is linear (homogeneous of degree one,
    /// no constant term) in `vars`, treating every other identifier as a constant.
    pub fn is_linear_in(&self, vars: &[&str]) -> bool {
        // degree: None = not polynomial-linear; Some(0) constant; Some(1) linear
        fn deg(e: &Expr, vars: &[&str]) -> Option<u8> {
            match e {
                Expr::Num(_) => Some(0),
                Expr::Var(v) => Some(u8::from(vars.contains(&v.as_str()))),
                Expr::Neg(a) => deg(a, vars),
                Expr::Floor(a) => {
                    if a.mentions(vars) {
                        None
                    } else {
                        Some(0)
                    }
                }
                Expr::Add(a, b) | Expr::Sub(a, b) => {
                    let (x, y) = (deg(a, vars)?, deg(b, vars)?);
                    Some(x.max(y))
                }
                Expr::Mul(a, b) => {
                    let d = deg(a, vars)? + deg(b, vars)?;
                    (d <= 1).then_some(d)
                }
                Expr::Div(a, b) => {
                    if deg(b, vars)? != 0 {
                        None
                    } else {
                        deg(a, vars)
                    }
                }
            }
        }
        if deg(self, vars).is_none() {
            return false;
        }
        // no constant term: zero at the origin for several bindings of the other identifiers
        let mut others = Vec::new();
        self.collect_vars(&mut others);
        others.retain(|v| !vars.contains(&v.as_str()));
        [(2, 7), (-3, 11), (5, 13)].iter().all(|&(n, d)| {
            let mut env = Bindings::new();
            for v in vars {
                env.insert((*v).to_string(), Q::zero());
            }
            for (k, v) in others.iter().enumerate() {
                env.insert(v.clone(), crate::rational::q(n + k as i64, d));
            }
            matches!(self.eval(&env), Ok(c) if c.is_zero())
        })
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::Neg(a) | Expr::Floor(a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{}", fmt_q(x)),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Div(a, b) => write!(f, "{a}/({b})"),
            Expr::Floor(a) => write!(f, "floor({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn env(pairs: &[(&str, Q)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn evaluates_projection_formula() {
        let e = Expr::parse("(p+q)*ε - p").unwrap();
        let b = env(&[("p", qi(2)), ("q", qi(1)), ("eps", q(1, 3))]);
        assert_eq!(e.eval(&b).unwrap(), qi(-1));
    }

    #[test]
    fn floor_and_rational_literals() {
        let e = Expr::parse("floor(2/5*p)").unwrap();
        assert_eq!(e.eval(&env(&[("p", qi(7))])).unwrap(), qi(2));
        assert_eq!(e.eval(&env(&[("p", qi(-1))])).unwrap(), qi(-1));
    }

    #[test]
    fn linearity_detection() {
        assert!(Expr::parse("(p+q)*eps - p").unwrap().is_linear_in(&["p", "q"]));
        assert!(!Expr::parse("p*q").unwrap().is_linear_in(&["p", "q"]));
        assert!(!Expr::parse("p + 1").unwrap().is_linear_in(&["p", "q"]));
        assert!(!Expr::parse("floor(eps*p)").unwrap().is_linear_in(&["p"]));
        assert!(Expr::parse("floor(eps)*p").unwrap().is_linear_in(&["p"]));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("p +").is_err());
        assert!(Expr::parse("p $ q").is_err());
        assert!(Expr::parse("(p").is_err());
        assert!(Expr::parse("p/0").unwrap().eval(&env(&[("p", qi(1))])).is_err());
    }
}
