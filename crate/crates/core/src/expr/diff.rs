//! Exact symbolic differentiation on the AST.
//!
//! The result evaluates to the exact partial derivative wherever the input
//! is smooth; nesting to arbitrary order is supported. `abs` is rejected
//! unless its argument is constant with respect to the variable — metrics
//! must be written smoothly on their admissible domain.

use std::sync::Arc;
use thiserror::Error;

use super::{add, call, div, is_zero, mul, neg, num, pow, sub, Expr, Expression, Func, Var};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiffError {
    #[error("abs is not differentiable at its kink; rewrite '{0}' smoothly on the domain")]
    AbsNotSmooth(String),
}

/// Exact partial derivative of `e` with respect to `var`.
pub fn differentiate(e: &Expression, var: Var) -> Result<Expression, DiffError> {
    let root = d(e.root(), var)?;
    Ok(Expression::from_root(root, e.dim()))
}

impl Expression {
    /// Convenience method form of [`differentiate`].
    pub fn differentiate(&self, var: Var) -> Result<Expression, DiffError> {
        differentiate(self, var)
    }
}

fn d(e: &Arc<Expr>, var: Var) -> Result<Arc<Expr>, DiffError> {
    Ok(match &**e {
        Expr::Num(_) | Expr::Param(_) => num(0.0),
        Expr::X(i) => num(if var == Var::X(*i) { 1.0 } else { 0.0 }),
        Expr::Y(i) => num(if var == Var::Y(*i) { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(d(a, var)?, d(b, var)?),
        Expr::Sub(a, b) => sub(d(a, var)?, d(b, var)?),
        Expr::Mul(a, b) => add(
            mul(d(a, var)?, b.clone()),
            mul(a.clone(), d(b, var)?),
        ),
        Expr::Div(a, b) => {
            let da = d(a, var)?;
            let db = d(b, var)?;
            // (a' b - a b') / b^2
            div(
                sub(mul(da, b.clone()), mul(a.clone(), db)),
                pow(b.clone(), num(2.0)),
            )
        }
        Expr::Neg(a) => neg(d(a, var)?),
        Expr::Pow(base, exponent) => {
            let dbase = d(base, var)?;
            let dexp = d(exponent, var)?;
            if is_zero(&dexp) {
                // Power rule with a constant (variable-free) exponent:
                // c u^(c-1) u'
                if is_zero(&dbase) {
                    return Ok(num(0.0));
                }
                let cm1 = sub(exponent.clone(), num(1.0));
                mul(
                    mul(exponent.clone(), pow(base.clone(), cm1)),
                    dbase,
                )
            } else {
                // u^w (w' ln u + w u'/u)
                let term1 = mul(dexp, call(Func::Log, base.clone()));
                let term2 = mul(exponent.clone(), div(dbase, base.clone()));
                mul(pow(base.clone(), exponent.clone()), add(term1, term2))
            }
        }
        Expr::Call(f, a) => {
            let da = d(a, var)?;
            if is_zero(&da) {
                return Ok(num(0.0));
            }
            match f {
                Func::Sqrt => div(da, mul(num(2.0), call(Func::Sqrt, a.clone()))),
                Func::Exp => mul(da, call(Func::Exp, a.clone())),
                Func::Log => div(da, a.clone()),
                Func::Sin => mul(da, call(Func::Cos, a.clone())),
                Func::Cos => neg(mul(da, call(Func::Sin, a.clone()))),
                Func::Atan => div(da, add(num(1.0), pow(a.clone(), num(2.0)))),
                Func::Abs => {
                    return Err(DiffError::AbsNotSmooth(format!(
                        "abs({})",
                        Expression::from_root(a.clone(), 0)
                    )))
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Params};

    fn dd(src: &str, dim: usize, var: Var) -> Expression {
        differentiate(&parse(src, dim).unwrap(), var).unwrap()
    }

    fn ev(e: &Expression, x: &[f64], y: &[f64]) -> f64 {
        e.eval(x, y, &Params::new()).unwrap()
    }

    #[test]
    fn polynomial_rule() {
        // d/dy0 (y0^2 + y1^2) = 2 y0
        let e = dd("y0^2 + y1^2", 2, Var::Y(0));
        assert_eq!(ev(&e, &[0.0, 0.0], &[3.0, 5.0]), 6.0);
        assert_eq!(ev(&e, &[0.0, 0.0], &[-1.5, 0.0]), -3.0);
    }

    #[test]
    fn sqrt_rule_hand_value() {
        // d/dy0 sqrt(y0^2+y1^2) at (3,4) = 3/5
        let e = dd("sqrt(y0^2+y1^2)", 2, Var::Y(0));
        assert!((ev(&e, &[0.0, 0.0], &[3.0, 4.0]) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_transcendentals() {
        // d/dx0 exp(2*x0) = 2 exp(2 x0)
        let e = dd("exp(2*x0)", 1, Var::X(0));
        assert!((ev(&e, &[0.5], &[0.0]) - 2.0 * 1.0f64.exp()).abs() < 1e-15);
        // d/dx0 log(x0) = 1/x0
        let l = dd("log(x0)", 1, Var::X(0));
        assert!((ev(&l, &[4.0], &[0.0]) - 0.25).abs() < 1e-15);
        // d/dx0 atan(x0) = 1/(1+x0^2)
        let a = dd("atan(x0)", 1, Var::X(0));
        assert!((ev(&a, &[2.0], &[0.0]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_parameter_exponent() {
        // d/dy0 y0^(1-s) = (1-s) y0^(-s); at y0=2, s=0.25: 0.75 * 2^-0.25
        let e = dd("y0^(1-s)", 1, Var::Y(0));
        let mut p = Params::new();
        p.insert("s".into(), 0.25);
        let v = e.eval::<f64>(&[0.0], &[2.0], &p).unwrap();
        assert!((v - 0.75 * 2.0f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn variable_exponent_general_rule() {
        // d/dx0 x0^x0 = x0^x0 (ln x0 + 1)
        let e = dd("x0^x0", 1, Var::X(0));
        let v = ev(&e, &[1.5], &[0.0]);
        let expect = 1.5f64.powf(1.5) * (1.5f64.ln() + 1.0);
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn nesting_to_higher_order() {
        // d^3/dy0^3 y0^5 = 60 y0^2
        let mut e = parse("y0^5", 1).unwrap();
        for _ in 0..3 {
            e = differentiate(&e, Var::Y(0)).unwrap();
        }
        assert_eq!(ev(&e, &[0.0], &[2.0]), 240.0);
    }

    #[test]
    fn abs_is_rejected_unless_constant() {
        let e = parse("abs(y0)", 1).unwrap();
        assert!(matches!(
            differentiate(&e, Var::Y(0)),
            Err(DiffError::AbsNotSmooth(_))
        ));
        // constant with respect to the variable: derivative is zero
        let c = differentiate(&e, Var::X(0)).unwrap();
        assert_eq!(ev(&c, &[9.0], &[4.0]), 0.0);
    }

    #[test]
    fn differentiation_is_total_otherwise() {
        // The derivative expression exists even where evaluation would fail.
        let e = dd("sqrt(y0)", 1, Var::Y(0));
        assert!(e.eval::<f64>(&[0.0], &[-1.0], &Params::new()).is_err());
        assert!((ev(&e, &[0.0], &[4.0]) - 0.25).abs() < 1e-15);
    }
}
