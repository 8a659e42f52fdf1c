use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::jet::{Jet, Scalar, MAX_ORDER};

/// A variable an expression may reference.
///
/// Indices are zero-based; `X(0)` prints as `x1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Curve parameter `t`.
    T,
    /// Ambient chart coordinate `x1..x4`.
    X(usize),
    /// Intrinsic coordinate of an immersion, `u1..u4`.
    U(usize),
}

pub const MAX_COORDS: usize = 4;

impl Var {
    pub fn from_name(name: &str) -> Option<Var> {
        if name == "t" {
            return Some(Var::T);
        }
        let (head, digits) = name.split_at(1);
        let idx: usize = digits.parse().ok()?;
        if !(1..=MAX_COORDS).contains(&idx) || digits.starts_with('0') {
            return None;
        }
        match head {
            "x" => Some(Var::X(idx - 1)),
            "u" => Some(Var::U(idx - 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::U(i) => write!(f, "u{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Parenthesized groups and literal spellings are kept so
/// that printing a parsed expression reproduces its source text.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Numeric literal with its source spelling (`pi` is a literal too).
    Num {
        value: f64,
        text: String,
    },
    Var(Var),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Paren(Box<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Num {
            value,
            text: format!("{value}"),
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn pow(base: Expr, exp: i32) -> Expr {
        Expr::Pow(Box::new(base), exp)
    }

    /// Structural copy with all `Paren` nodes removed and literal spellings
    /// normalized. Useful for comparing trees that differ only in grouping.
    pub fn strip_groups(&self) -> Expr {
        match self {
            Expr::Num { value, .. } => Expr::num(*value),
            Expr::Var(v) => Expr::Var(*v),
            Expr::Neg(e) => Expr::Neg(Box::new(e.strip_groups())),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.strip_groups())),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.strip_groups()), Box::new(b.strip_groups()))
            }
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.strip_groups()), *n),
            Expr::Paren(e) => e.strip_groups(),
        }
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num { .. } => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Call(_, e) | Expr::Pow(e, _) | Expr::Paren(e) => {
                e.collect_vars(out)
            }
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.variables().is_empty()
    }

    /// Evaluates over any [`Scalar`] type. Domain checks use the plain value
    /// at the expansion point.
    pub fn eval<S: Scalar>(&self, env: &Env<S>) -> Result<S, EvalError> {
        match self {
            Expr::Num { value, .. } => Ok(S::from_f64(*value)),
            Expr::Var(v) => env.get(*v).ok_or(EvalError::Unbound(*v)),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Paren(e) => e.eval(env),
            Expr::Call(f, arg) => {
                let a = arg.eval(env)?;
                let out = match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a.value() <= 0.0 {
                            return Err(self.domain("log of non-positive value", a.value()));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a.value() < 0.0 {
                            return Err(self.domain("sqrt of negative value", a.value()));
                        }
                        a.sqrt()
                    }
                };
                if !out.is_finite() {
                    return Err(self.domain("non-finite result", a.value()));
                }
                Ok(out)
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                Ok(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.value() == 0.0 {
                            return Err(self.domain("division by zero", 0.0));
                        }
                        x / y
                    }
                })
            }
            Expr::Pow(base, n) => {
                let b = base.eval(env)?;
                if *n < 0 && b.value() == 0.0 {
                    return Err(self.domain("negative power of zero", 0.0));
                }
                Ok(b.powi(*n))
            }
        }
    }

    fn domain(&self, what: &'static str, value: f64) -> EvalError {
        EvalError::Domain {
            what,
            expr: self.to_string(),
            value,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num { text, .. } => write!(f, "{text}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "-{e}"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "{a}{}{b}", op.symbol()),
            Expr::Pow(b, n) => write!(f, "{b}^{n}"),
            Expr::Paren(e) => write!(f, "({e})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    #[error("domain error in `{expr}`: {what} (argument {value})")]
    Domain {
        what: &'static str,
        expr: String,
        value: f64,
    },
    #[error("jet order {0} exceeds the maximum of {MAX_ORDER}")]
    OrderTooHigh(usize),
}

/// Variable bindings for evaluation.
#[derive(Clone, Debug)]
pub struct Env<S> {
    pub t: Option<S>,
    pub x: Vec<S>,
    pub u: Vec<S>,
}

impl<S> Default for Env<S> {
    fn default() -> Self {
        Env {
            t: None,
            x: Vec::new(),
            u: Vec::new(),
        }
    }
}

impl<S: Clone> Env<S> {
    pub fn with_t(t: S) -> Self {
        Env {
            t: Some(t),
            ..Env::default()
        }
    }

    pub fn with_x(x: Vec<S>) -> Self {
        Env {
            x,
            ..Env::default()
        }
    }

    pub fn with_u(u: Vec<S>) -> Self {
        Env {
            u,
            ..Env::default()
        }
    }

    pub fn get(&self, v: Var) -> Option<S> {
        match v {
            Var::T => self.t.clone(),
            Var::X(i) => self.x.get(i).cloned(),
            Var::U(i) => self.u.get(i).cloned(),
        }
    }
}

/// Evaluates `e` with jet bindings, returning a jet of exactly `order`.
pub fn eval_jet(e: &Expr, env: &Env<Jet>, order: usize) -> Result<Jet, EvalError> {
    if order > MAX_ORDER {
        return Err(EvalError::OrderTooHigh(order));
    }
    let trunc = |v: &Vec<Jet>| v.iter().map(|j| j.truncate(order)).collect::<Vec<_>>();
    let env = Env {
        t: env.t.as_ref().map(|j| j.truncate(order)),
        x: trunc(&env.x),
        u: trunc(&env.u),
    };
    Ok(e.eval(&env)?.to_order(order))
}
