//! Immutable expression trees over the complex numbers.
//!
//! Expressions are built in the two independent variables `x` (spectral) and
//! `t` (deformation) plus named parameters. Construction goes through smart
//! constructors that perform local constant folding and the rewrites
//! `e^0 -> 1`, `0*e -> 0`, `1*e -> e`, `0+e -> e`; nothing else is simplified.
//! Identity questions are answered numerically with [`numerically_zero`].

mod parse;
mod quad;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use thiserror::Error;

pub use parse::ParseError;
pub use quad::{integrate_along_path, integrate_path_with, Path, QUAD_REL_TOL};

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("non-finite value produced")]
    NonFinite,
    #[error("quadrature did not converge (estimated error {estimate:.3e})")]
    QuadratureNonconvergence { estimate: f64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// One of the two independent variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    Var(Var),
    Param(Arc<str>),
    Neg(Expr),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Integer power, exponent stored exactly.
    Pow(Expr, i64),
    /// Principal-branch rational power, exponent in lowest terms with denominator > 1.
    RatPow(Expr, Rational64),
    Exp(Expr),
    Log(Expr),
    Sqrt(Expr),
}

/// Shared, immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

/// Values for the variables and parameters at an evaluation point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binding {
    pub x: Option<C64>,
    pub t: Option<C64>,
    pub params: BTreeMap<String, C64>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(x: C64, t: C64) -> Self {
        Self {
            x: Some(x),
            t: Some(t),
            params: BTreeMap::new(),
        }
    }

    pub fn at_x(x: C64) -> Self {
        Self {
            x: Some(x),
            ..Self::default()
        }
    }

    pub fn at_t(t: C64) -> Self {
        Self {
            t: Some(t),
            ..Self::default()
        }
    }

    pub fn with_x(mut self, x: C64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn with_t(mut self, t: C64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_param(mut self, name: &str, value: C64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn var(&self, v: Var) -> Option<C64> {
        match v {
            Var::X => self.x,
            Var::T => self.t,
        }
    }

    pub fn set_var(&mut self, v: Var, value: C64) {
        match v {
            Var::X => self.x = Some(value),
            Var::T => self.t = Some(value),
        }
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e.node(), Node::Const(c) if *c == C64::new(v, 0.0))
}

impl Expr {
    fn wrap(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: C64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C64::new(v, 0.0))
    }

    pub fn rational(r: Rational64) -> Self {
        Self::real(*r.numer() as f64 / *r.denom() as f64)
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn x() -> Self {
        Self::wrap(Node::Var(Var::X))
    }

    pub fn t() -> Self {
        Self::wrap(Node::Var(Var::T))
    }

    pub fn var(v: Var) -> Self {
        Self::wrap(Node::Var(v))
    }

    pub fn param(name: &str) -> Self {
        Self::wrap(Node::Param(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        is_const(self, 0.0)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.node(), rhs.node()) {
            (Node::Const(a), Node::Const(b)) => Expr::constant(a + b),
            _ if self.is_zero() => rhs.clone(),
            _ if rhs.is_zero() => self.clone(),
            _ => Self::wrap(Node::Add(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        match (self.node(), rhs.node()) {
            (Node::Const(a), Node::Const(b)) => Expr::constant(a * b),
            _ if self.is_zero() || rhs.is_zero() => Expr::zero(),
            _ if is_const(self, 1.0) => rhs.clone(),
            _ if is_const(rhs, 1.0) => self.clone(),
            _ => Self::wrap(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.node(), rhs.node()) {
            (Node::Const(a), Node::Const(b)) if *b != C64::new(0.0, 0.0) => Expr::constant(a / b),
            _ if is_const(rhs, 1.0) => self.clone(),
            _ if self.is_zero() && !rhs.is_zero() => Expr::zero(),
            _ => Self::wrap(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn powi(&self, n: i64) -> Expr {
        match self.node() {
            _ if n == 0 => Expr::one(),
            _ if n == 1 => self.clone(),
            Node::Const(c) if n > 0 || *c != C64::new(0.0, 0.0) => {
                Expr::constant(c.powi(n as i32))
            }
            _ => Self::wrap(Node::Pow(self.clone(), n)),
        }
    }

    /// Principal-branch power with an exact rational exponent.
    pub fn pow_ratio(&self, exponent: Rational64) -> Expr {
        if exponent.is_integer() {
            return self.powi(*exponent.numer());
        }
        match self.node() {
            Node::Const(c) if *c != C64::new(0.0, 0.0) => Expr::constant(ratpow(*c, exponent)),
            _ => Self::wrap(Node::RatPow(self.clone(), exponent)),
        }
    }

    pub fn exp(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(c.exp()),
            _ => Self::wrap(Node::Exp(self.clone())),
        }
    }

    pub fn ln(&self) -> Expr {
        match self.node() {
            Node::Const(c) if *c != C64::new(0.0, 0.0) => Expr::constant(c.ln()),
            _ => Self::wrap(Node::Log(self.clone())),
        }
    }

    pub fn sqrt(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(c.sqrt()),
            _ => Self::wrap(Node::Sqrt(self.clone())),
        }
    }

    /// Evaluates the tree at a binding. Principal branches throughout.
    pub fn eval(&self, b: &Binding) -> Result<C64, ExprError> {
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(v) => b.var(*v).ok_or_else(|| ExprError::Unbound(v.name().into()))?,
            Node::Param(name) => *b
                .params
                .get(name.as_ref())
                .ok_or_else(|| ExprError::Unbound(name.to_string()))?,
            Node::Neg(e) => -e.eval(b)?,
            Node::Add(l, r) => l.eval(b)? + r.eval(b)?,
            Node::Mul(l, r) => l.eval(b)? * r.eval(b)?,
            Node::Div(l, r) => {
                let num = l.eval(b)?;
                let den = r.eval(b)?;
                if den == C64::new(0.0, 0.0) {
                    return Err(ExprError::DivisionByZero);
                }
                num / den
            }
            Node::Pow(e, n) => {
                let base = e.eval(b)?;
                if *n < 0 && base == C64::new(0.0, 0.0) {
                    return Err(ExprError::DivisionByZero);
                }
                powi_exact(base, *n)
            }
            Node::RatPow(e, r) => {
                let base = e.eval(b)?;
                if base == C64::new(0.0, 0.0) {
                    if *r.numer() < 0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    C64::new(0.0, 0.0)
                } else {
                    ratpow(base, *r)
                }
            }
            Node::Exp(e) => e.eval(b)?.exp(),
            Node::Log(e) => {
                let arg = e.eval(b)?;
                if arg == C64::new(0.0, 0.0) {
                    return Err(ExprError::LogOfZero);
                }
                arg.ln()
            }
            Node::Sqrt(e) => e.eval(b)?.sqrt(),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Exact symbolic derivative.
    pub fn diff(&self, var: Var) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Param(_) => Expr::zero(),
            Node::Var(v) => {
                if *v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(e) => e.diff(var).neg(),
            Node::Add(l, r) => l.diff(var).add(&r.diff(var)),
            Node::Mul(l, r) => l.diff(var).mul(r).add(&l.mul(&r.diff(var))),
            Node::Div(l, r) => {
                let dl = l.diff(var);
                let dr = r.diff(var);
                if dr.is_zero() {
                    dl.div(r)
                } else {
                    dl.mul(r).sub(&l.mul(&dr)).div(&r.powi(2))
                }
            }
            Node::Pow(e, n) => Expr::real(*n as f64)
                .mul(&e.powi(n - 1))
                .mul(&e.diff(var)),
            Node::RatPow(e, r) => Expr::rational(*r)
                .mul(&e.pow_ratio(r - Rational64::from_integer(1)))
                .mul(&e.diff(var)),
            Node::Exp(e) => self.mul(&e.diff(var)),
            Node::Log(e) => e.diff(var).div(e),
            Node::Sqrt(e) => e.diff(var).div(&Expr::real(2.0).mul(self)),
        }
    }

    fn map_leaves(&self, f: &impl Fn(&Node) -> Option<Expr>) -> Expr {
        if let Some(replaced) = f(self.node()) {
            return replaced;
        }
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Param(_) => self.clone(),
            Node::Neg(e) => e.map_leaves(f).neg(),
            Node::Add(l, r) => l.map_leaves(f).add(&r.map_leaves(f)),
            Node::Mul(l, r) => l.map_leaves(f).mul(&r.map_leaves(f)),
            Node::Div(l, r) => l.map_leaves(f).div(&r.map_leaves(f)),
            Node::Pow(e, n) => e.map_leaves(f).powi(*n),
            Node::RatPow(e, r) => e.map_leaves(f).pow_ratio(*r),
            Node::Exp(e) => e.map_leaves(f).exp(),
            Node::Log(e) => e.map_leaves(f).ln(),
            Node::Sqrt(e) => e.map_leaves(f).sqrt(),
        }
    }

    /// Replaces every occurrence of `var` with `with`.
    pub fn subs_var(&self, var: Var, with: &Expr) -> Expr {
        self.map_leaves(&|n| match n {
            Node::Var(v) if *v == var => Some(with.clone()),
            _ => None,
        })
    }

    /// Replaces the named parameter with an expression.
    pub fn subs_param(&self, name: &str, with: &Expr) -> Expr {
        self.map_leaves(&|n| match n {
            Node::Param(p) if p.as_ref() == name => Some(with.clone()),
            _ => None,
        })
    }

    /// Replaces every parameter found in `values` by a constant.
    pub fn bind_params(&self, values: &BTreeMap<String, C64>) -> Expr {
        self.map_leaves(&|n| match n {
            Node::Param(p) => values.get(p.as_ref()).map(|v| Expr::constant(*v)),
            _ => None,
        })
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Param(p) => {
                out.insert(p.to_string());
            }
            Node::Const(_) | Node::Var(_) => {}
            Node::Neg(e)
            | Node::Pow(e, _)
            | Node::RatPow(e, _)
            | Node::Exp(e)
            | Node::Log(e)
            | Node::Sqrt(e) => e.collect_params(out),
            Node::Add(l, r) | Node::Mul(l, r) | Node::Div(l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
        }
    }

    /// Structural occurrence test; `x - x` still "depends" on `x`.
    pub fn mentions(&self, var: Var) -> bool {
        match self.node() {
            Node::Var(v) => *v == var,
            Node::Const(_) | Node::Param(_) => false,
            Node::Neg(e)
            | Node::Pow(e, _)
            | Node::RatPow(e, _)
            | Node::Exp(e)
            | Node::Log(e)
            | Node::Sqrt(e) => e.mentions(var),
            Node::Add(l, r) | Node::Mul(l, r) | Node::Div(l, r) => {
                l.mentions(var) || r.mentions(var)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Param(_) => 1,
            Node::Neg(e)
            | Node::Pow(e, _)
            | Node::RatPow(e, _)
            | Node::Exp(e)
            | Node::Log(e)
            | Node::Sqrt(e) => 1 + e.node_count(),
            Node::Add(l, r) | Node::Mul(l, r) | Node::Div(l, r) => {
                1 + l.node_count() + r.node_count()
            }
        }
    }

    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parse::parse(src)
    }

    /// Shorthand for `eval` at an `(x, t)` point with no parameters.
    pub fn at(&self, x: C64, t: C64) -> Result<C64, ExprError> {
        self.eval(&Binding::at(x, t))
    }
}

fn powi_exact(base: C64, n: i64) -> C64 {
    if n >= 0 {
        let mut acc = C64::new(1.0, 0.0);
        let mut b = base;
        let mut k = n as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc *= b;
            }
            b *= b;
            k >>= 1;
        }
        acc
    } else {
        C64::new(1.0, 0.0) / powi_exact(base, -n)
    }
}

fn ratpow(base: C64, r: Rational64) -> C64 {
    let e = *r.numer() as f64 / *r.denom() as f64;
    if base.im == 0.0 && base.re > 0.0 {
        C64::new(base.re.powf(e), 0.0)
    } else {
        (base.ln() * e).exp()
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$inner(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$inner(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$inner(&self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$inner(self, &rhs)
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$inner(&self, &Expr::real(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$inner(self, &Expr::real(rhs))
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Decides whether `e` vanishes identically by sampling.
///
/// True iff `max |e|` over the probes is at most `tol * (1 + scale)`, where
/// `scale` is the largest magnitude of `reference` over the same probes
/// (zero when no reference is given).
pub fn numerically_zero(
    e: &Expr,
    probes: &[Binding],
    tol: f64,
    reference: Option<&Expr>,
) -> Result<bool, ExprError> {
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for b in probes {
        worst = worst.max(e.eval(b)?.norm());
        if let Some(r) = reference {
            scale = scale.max(r.eval(b)?.norm());
        }
    }
    Ok(worst <= tol * (1.0 + scale))
}
