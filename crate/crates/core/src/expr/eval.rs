//! Generic evaluation of expressions at a point `(x, y)`.
//!
//! Evaluation works over any [`Scalar`], so the same tree yields plain
//! values at `f64` and exact directional derivatives at dual numbers.
//! Domain violations (square roots of negatives, logs of non-positives,
//! division by zero) surface as structured errors; they are decided on
//! the real part of the operands.

use thiserror::Error;

use super::{Expr, Expression, Func, Params};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unbound parameter '{0}'")]
    UnboundParameter(String),
}

impl Expression {
    /// Evaluate at base point `x` and direction `y` with the given
    /// parameter bindings. IEEE-754 semantics of the underlying scalar;
    /// deterministic for fixed inputs.
    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S], params: &Params) -> Result<S, EvalError> {
        let v = eval_node(self.root(), x, y, params)?;
        if !v.is_finite() {
            return Err(EvalError::Domain(
                "non-finite result (outside the smooth domain)".into(),
            ));
        }
        Ok(v)
    }
}

fn eval_node<S: Scalar>(e: &Expr, x: &[S], y: &[S], params: &Params) -> Result<S, EvalError> {
    Ok(match e {
        Expr::Num(v) => S::from_real(*v),
        Expr::X(i) => x[*i],
        Expr::Y(i) => y[*i],
        Expr::Param(name) => match params.get(name.as_ref()) {
            Some(v) => S::from_real(*v),
            None => return Err(EvalError::UnboundParameter(name.to_string())),
        },
        Expr::Add(a, b) => eval_node(a, x, y, params)? + eval_node(b, x, y, params)?,
        Expr::Sub(a, b) => eval_node(a, x, y, params)? - eval_node(b, x, y, params)?,
        Expr::Mul(a, b) => eval_node(a, x, y, params)? * eval_node(b, x, y, params)?,
        Expr::Div(a, b) => {
            let den = eval_node(b, x, y, params)?;
            if den.value() == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            eval_node(a, x, y, params)? / den
        }
        Expr::Pow(a, b) => {
            let base = eval_node(a, x, y, params)?;
            if let Expr::Num(n) = &**b {
                if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 {
                    let k = *n as i32;
                    if k < 0 && base.value() == 0.0 {
                        return Err(EvalError::Domain(
                            "zero base with negative exponent".into(),
                        ));
                    }
                    return Ok(base.powi(k));
                }
            }
            let exponent = eval_node(b, x, y, params)?;
            let bv = base.value();
            let ev = exponent.value();
            if bv == 0.0 && ev < 0.0 {
                return Err(EvalError::Domain("zero base with negative exponent".into()));
            }
            if bv < 0.0 && ev.fract() != 0.0 {
                return Err(EvalError::Domain(
                    "negative base with non-integer exponent".into(),
                ));
            }
            base.powf(exponent)
        }
        Expr::Neg(a) => -eval_node(a, x, y, params)?,
        Expr::Call(f, a) => {
            let arg = eval_node(a, x, y, params)?;
            match f {
                Func::Sqrt => {
                    if arg.value() < 0.0 {
                        return Err(EvalError::Domain("sqrt of a negative value".into()));
                    }
                    arg.sqrt()
                }
                Func::Exp => arg.exp(),
                Func::Log => {
                    if arg.value() <= 0.0 {
                        return Err(EvalError::Domain("log of a non-positive value".into()));
                    }
                    arg.ln()
                }
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
                Func::Abs => arg.abs(),
                Func::Atan => arg.atan(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::scalar::{seed_direction, Dual};

    #[test]
    fn quadratic_form() {
        let e = parse("y0^2 - y1^2", 2).unwrap();
        let v: f64 = e.eval(&[0.0, 0.0], &[2.0, 1.0], &Params::new()).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn sqrt_negative_is_domain_error() {
        let e = parse("sqrt(y0)", 1).unwrap();
        let err = e.eval::<f64>(&[0.0], &[-1.0], &Params::new()).unwrap_err();
        assert!(matches!(err, EvalError::Domain(_)));
    }

    #[test]
    fn division_by_zero() {
        let e = parse("1/y0", 1).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[0.0], &[0.0], &Params::new()),
            Err(EvalError::Domain(_))
        ));
    }

    #[test]
    fn unbound_parameter() {
        let e = parse("k*y0", 1).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[0.0], &[1.0], &Params::new()),
            Err(EvalError::UnboundParameter(_))
        ));
    }

    #[test]
    fn dual_evaluation_differentiates() {
        // d/dy0 sqrt(y0^2 + y1^2) at (3,4) = 3/5
        let e = parse("sqrt(y0^2 + y1^2)", 2).unwrap();
        let x = [Dual::<f64>::constant(0.0), Dual::constant(0.0)];
        let y = seed_direction(&[3.0, 4.0], 0);
        let v: Dual<f64> = e.eval(&x, &y, &Params::new()).unwrap();
        assert!((v.re - 5.0).abs() < 1e-15);
        assert!((v.d - 0.6).abs() < 1e-15);
    }

    #[test]
    fn parameterized_power() {
        // (y0)^(2s) at y0=2, s=0.5 -> 2
        let e = parse("y0^(2*s)", 1).unwrap();
        let mut p = Params::new();
        p.insert("s".into(), 0.5);
        let v: f64 = e.eval(&[0.0], &[2.0], &p).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_bits() {
        let e = parse("(sqrt(y0^2+y1^2) + 0.3*y0)^2 * exp(x0)", 2).unwrap();
        let a: f64 = e.eval(&[0.37, 0.0], &[1.1, 0.4], &Params::new()).unwrap();
        let b: f64 = e.eval(&[0.37, 0.0], &[1.1, 0.4], &Params::new()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
