//! Expression language for Lagrangians, domain predicates and chart maps.
//!
//! Coordinates are `x0..x{n-1}` (base) and `y0..y{n-1}` (fiber); any other
//! identifier is a named parameter bound at evaluation time (`pi` and `e`
//! are reserved constants). Supported functions: `sqrt`, `exp`, `log`,
//! `sin`, `cos`, `abs`, `atan`. Expressions are immutable, cheaply
//! cloneable (shared subtrees) and safe to share across threads.

mod diff;
mod eval;
mod parser;

pub use diff::{differentiate, DiffError};
pub use eval::EvalError;
pub use parser::{parse, parse_curve_component, ParseError};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Parameter bindings used at evaluation time.
pub type Params = BTreeMap<String, f64>;

/// A coordinate variable: base slot `x^i` or fiber slot `y^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X(usize),
    Y(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Y(i) => write!(f, "y{i}"),
        }
    }
}

/// Built-in unary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn apply_f64(self, v: f64) -> f64 {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Abs => v.abs(),
            Func::Atan => v.atan(),
        }
    }
}

/// AST node. Subtrees are shared via `Arc`, so clones are cheap and
/// derivative towers reuse storage.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X(usize),
    Y(usize),
    Param(Arc<str>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    Call(Func, Arc<Expr>),
}

fn num_val(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

// Smart constructors: constant folding and unit elimination keep the
// derivative towers from exploding. Correctness is defined by evaluation,
// not canonical form.

pub(crate) fn num(v: f64) -> Arc<Expr> {
    Arc::new(Expr::Num(v))
}

pub(crate) fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    if let (Some(x), Some(y)) = (num_val(&a), num_val(&b)) {
        if (x + y).is_finite() {
            return num(x + y);
        }
    }
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    Arc::new(Expr::Add(a, b))
}

pub(crate) fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    if let (Some(x), Some(y)) = (num_val(&a), num_val(&b)) {
        if (x - y).is_finite() {
            return num(x - y);
        }
    }
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    Arc::new(Expr::Sub(a, b))
}

pub(crate) fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    if let (Some(x), Some(y)) = (num_val(&a), num_val(&b)) {
        if (x * y).is_finite() {
            return num(x * y);
        }
    }
    if is_zero(&a) || is_zero(&b) {
        return num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    Arc::new(Expr::Mul(a, b))
}

pub(crate) fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    if is_zero(&a) {
        return num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    if let (Some(x), Some(y)) = (num_val(&a), num_val(&b)) {
        if y != 0.0 && (x / y).is_finite() {
            return num(x / y);
        }
    }
    Arc::new(Expr::Div(a, b))
}

pub(crate) fn pow(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    if is_one(&b) {
        return a;
    }
    if is_zero(&b) {
        return num(1.0);
    }
    if let (Some(x), Some(y)) = (num_val(&a), num_val(&b)) {
        if y.fract() == 0.0 && y.abs() <= 64.0 && x.powi(y as i32).is_finite() {
            return num(x.powi(y as i32));
        }
    }
    Arc::new(Expr::Pow(a, b))
}

pub(crate) fn neg(a: Arc<Expr>) -> Arc<Expr> {
    match &*a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => inner.clone(),
        _ => Arc::new(Expr::Neg(a)),
    }
}

pub(crate) fn call(f: Func, a: Arc<Expr>) -> Arc<Expr> {
    if let Some(v) = num_val(&a) {
        let folded = f.apply_f64(v);
        if folded.is_finite() {
            return num(folded);
        }
    }
    Arc::new(Expr::Call(f, a))
}

/// An immutable expression over `n` base and `n` fiber coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Arc<Expr>,
    dim: usize,
}

impl Expression {
    pub(crate) fn from_root(root: Arc<Expr>, dim: usize) -> Self {
        Expression { root, dim }
    }

    pub fn root(&self) -> &Arc<Expr> {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num(v: f64) -> Self {
        Expression::from_root(num(v), 0)
    }

    pub fn var(v: Var, dim: usize) -> Self {
        let root = match v {
            Var::X(i) => {
                assert!(i < dim, "variable index out of range");
                Arc::new(Expr::X(i))
            }
            Var::Y(i) => {
                assert!(i < dim, "variable index out of range");
                Arc::new(Expr::Y(i))
            }
        };
        Expression::from_root(root, dim)
    }

    pub fn x(i: usize, dim: usize) -> Self {
        Expression::var(Var::X(i), dim)
    }

    pub fn y(i: usize, dim: usize) -> Self {
        Expression::var(Var::Y(i), dim)
    }

    pub fn param(name: &str) -> Self {
        Expression::from_root(Arc::new(Expr::Param(Arc::from(name))), 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        Expression::from_root(add(self.root.clone(), o.root.clone()), self.dim.max(o.dim))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Expression::from_root(sub(self.root.clone(), o.root.clone()), self.dim.max(o.dim))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Expression::from_root(mul(self.root.clone(), o.root.clone()), self.dim.max(o.dim))
    }

    pub fn div(&self, o: &Self) -> Self {
        Expression::from_root(div(self.root.clone(), o.root.clone()), self.dim.max(o.dim))
    }

    pub fn pow(&self, o: &Self) -> Self {
        Expression::from_root(pow(self.root.clone(), o.root.clone()), self.dim.max(o.dim))
    }

    pub fn pow_i(&self, n: i64) -> Self {
        self.pow(&Expression::num(n as f64))
    }

    pub fn neg(&self) -> Self {
        Expression::from_root(neg(self.root.clone()), self.dim)
    }

    pub fn apply(&self, f: Func) -> Self {
        Expression::from_root(call(f, self.root.clone()), self.dim)
    }

    pub fn sqrt(&self) -> Self {
        self.apply(Func::Sqrt)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.mul(&Expression::num(c))
    }

    /// True if any `x` or `y` coordinate occurs in the tree.
    pub fn depends_on_coordinates(&self) -> bool {
        fn walk(e: &Expr) -> bool {
            match e {
                Expr::X(_) | Expr::Y(_) => true,
                Expr::Num(_) | Expr::Param(_) => false,
                Expr::Add(a, b)
                | Expr::Sub(a, b)
                | Expr::Mul(a, b)
                | Expr::Div(a, b)
                | Expr::Pow(a, b) => walk(a) || walk(b),
                Expr::Neg(a) | Expr::Call(_, a) => walk(a),
            }
        }
        walk(&self.root)
    }

    /// True if some `x` coordinate occurs (direction-only expressions are
    /// position-independent).
    pub fn depends_on_position(&self) -> bool {
        fn walk(e: &Expr) -> bool {
            match e {
                Expr::X(_) => true,
                Expr::Num(_) | Expr::Param(_) | Expr::Y(_) => false,
                Expr::Add(a, b)
                | Expr::Sub(a, b)
                | Expr::Mul(a, b)
                | Expr::Div(a, b)
                | Expr::Pow(a, b) => walk(a) || walk(b),
                Expr::Neg(a) | Expr::Call(_, a) => walk(a),
            }
        }
        walk(&self.root)
    }

    /// True if some `y` coordinate occurs.
    pub fn depends_on_direction(&self) -> bool {
        fn walk(e: &Expr) -> bool {
            match e {
                Expr::Y(_) => true,
                Expr::Num(_) | Expr::Param(_) | Expr::X(_) => false,
                Expr::Add(a, b)
                | Expr::Sub(a, b)
                | Expr::Mul(a, b)
                | Expr::Div(a, b)
                | Expr::Pow(a, b) => walk(a) || walk(b),
                Expr::Neg(a) | Expr::Call(_, a) => walk(a),
            }
        }
        walk(&self.root)
    }

    /// Replace every `x^i` by `x_subs[i]` and every `y^i` by `y_subs[i]`.
    /// Used to pull a field back along a chart change.
    pub fn compose(&self, x_subs: &[Expression], y_subs: &[Expression], new_dim: usize) -> Self {
        fn walk(e: &Arc<Expr>, xs: &[Expression], ys: &[Expression]) -> Arc<Expr> {
            match &**e {
                Expr::Num(_) | Expr::Param(_) => e.clone(),
                Expr::X(i) => xs[*i].root.clone(),
                Expr::Y(i) => ys[*i].root.clone(),
                Expr::Add(a, b) => add(walk(a, xs, ys), walk(b, xs, ys)),
                Expr::Sub(a, b) => sub(walk(a, xs, ys), walk(b, xs, ys)),
                Expr::Mul(a, b) => mul(walk(a, xs, ys), walk(b, xs, ys)),
                Expr::Div(a, b) => div(walk(a, xs, ys), walk(b, xs, ys)),
                Expr::Pow(a, b) => pow(walk(a, xs, ys), walk(b, xs, ys)),
                Expr::Neg(a) => neg(walk(a, xs, ys)),
                Expr::Call(f, a) => call(*f, walk(a, xs, ys)),
            }
        }
        Expression::from_root(walk(&self.root, x_subs, y_subs), new_dim)
    }
}

impl std::ops::Add for &Expression {
    type Output = Expression;
    fn add(self, rhs: Self) -> Expression {
        Expression::add(self, rhs)
    }
}
impl std::ops::Sub for &Expression {
    type Output = Expression;
    fn sub(self, rhs: Self) -> Expression {
        Expression::sub(self, rhs)
    }
}
impl std::ops::Mul for &Expression {
    type Output = Expression;
    fn mul(self, rhs: Self) -> Expression {
        Expression::mul(self, rhs)
    }
}
impl std::ops::Div for &Expression {
    type Output = Expression;
    fn div(self, rhs: Self) -> Expression {
        Expression::div(self, rhs)
    }
}

// Precedence levels for printing: additive 1, multiplicative 2, unary 3,
// power 4, atoms 5. A child is parenthesized when its level is below what
// its slot requires, so printed text reparses to the same tree.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

fn fmt_node(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = precedence(e);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match e {
        Expr::Num(v) => {
            if *v == v.trunc() && v.abs() < 1e15 {
                write!(f, "{v:.0}")?;
            } else {
                write!(f, "{v:e}")?;
            }
        }
        Expr::X(i) => write!(f, "x{i}")?,
        Expr::Y(i) => write!(f, "y{i}")?,
        Expr::Param(name) => write!(f, "{name}")?,
        Expr::Add(a, b) => {
            fmt_node(a, 1, f)?;
            write!(f, " + ")?;
            fmt_node(b, 2, f)?;
        }
        Expr::Sub(a, b) => {
            fmt_node(a, 1, f)?;
            write!(f, " - ")?;
            fmt_node(b, 2, f)?;
        }
        Expr::Mul(a, b) => {
            fmt_node(a, 2, f)?;
            write!(f, "*")?;
            fmt_node(b, 3, f)?;
        }
        Expr::Div(a, b) => {
            fmt_node(a, 2, f)?;
            write!(f, "/")?;
            fmt_node(b, 3, f)?;
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            fmt_node(a, 3, f)?;
        }
        Expr::Pow(a, b) => {
            fmt_node(a, 5, f)?;
            write!(f, "^")?;
            fmt_node(b, 3, f)?;
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            fmt_node(a, 1, f)?;
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_fold_constants() {
        let e = Expression::num(2.0).add(&Expression::num(3.0));
        assert_eq!(**e.root(), Expr::Num(5.0));
        let z = Expression::x(0, 2).mul(&Expression::num(0.0));
        assert_eq!(**z.root(), Expr::Num(0.0));
        let o = Expression::x(0, 2).pow(&Expression::num(0.0));
        assert_eq!(**o.root(), Expr::Num(1.0));
    }

    #[test]
    fn compose_substitutes() {
        // f = x0 * y1; substitute x0 -> x1^2, y1 -> y0 + y1
        let f = Expression::x(0, 2).mul(&Expression::y(1, 2));
        let xs = [Expression::x(1, 2).pow_i(2), Expression::x(1, 2)];
        let ys = [
            Expression::y(0, 2),
            Expression::y(0, 2).add(&Expression::y(1, 2)),
        ];
        let g = f.compose(&xs, &ys, 2);
        let v = g
            .eval::<f64>(&[0.0, 3.0], &[1.0, 2.0], &Params::new())
            .unwrap();
        // x1^2 * (y0 + y1) = 9 * 3 = 27
        assert_eq!(v, 27.0);
    }
}
