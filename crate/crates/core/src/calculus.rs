//! Derivative utilities over scalar fields on `(x, y)`.
//!
//! [`ScalarField`] pairs an expression with its dimension and parameter
//! bindings and caches symbolic partials, so deep derivative towers reuse
//! work. [`fd_partial`] is the independent central-difference oracle used
//! by the test suites; it never touches the symbolic engine.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::expr::{differentiate, Expression, Params, Var};
use crate::scalar::Scalar;

/// An evaluable scalar field on `ℝ^n × ℝ^n` with exact partials.
#[derive(Debug)]
pub struct ScalarField {
    expr: Expression,
    dim: usize,
    params: Params,
    // Keyed by the sorted variable list, so mixed partials are requested in
    // one canonical order and every prefix is shared.
    partials: RwLock<HashMap<Vec<Var>, Expression>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        ScalarField {
            expr: self.expr.clone(),
            dim: self.dim,
            params: self.params.clone(),
            partials: RwLock::new(self.partials.read().unwrap().clone()),
        }
    }
}

impl ScalarField {
    pub fn new(expr: Expression, dim: usize, params: Params) -> Self {
        ScalarField {
            expr,
            dim,
            params,
            partials: RwLock::new(HashMap::new()),
        }
    }

    pub fn expr(&self) -> &Expression {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        Ok(self.expr.eval(x, y, &self.params)?)
    }

    /// Exact symbolic partial for the (unordered) multi-index `vars`.
    pub fn partial(&self, vars: &[Var]) -> Result<Expression> {
        let mut key: Vec<Var> = vars.to_vec();
        key.sort();
        if let Some(hit) = self.partials.read().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let expr = if key.is_empty() {
            self.expr.clone()
        } else {
            let prefix = self.partial(&key[..key.len() - 1])?;
            differentiate(&prefix, key[key.len() - 1])?
        };
        self.partials.write().unwrap().insert(key, expr.clone());
        Ok(expr)
    }

    /// Evaluate an exact partial at a point.
    pub fn eval_partial<S: Scalar>(&self, vars: &[Var], x: &[S], y: &[S]) -> Result<S> {
        Ok(self.partial(vars)?.eval(x, y, &self.params)?)
    }

    /// Fiber gradient `(∂f/∂y^0, …, ∂f/∂y^{n-1})`.
    pub fn grad_y<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        (0..self.dim)
            .map(|i| self.eval_partial(&[Var::Y(i)], x, y))
            .collect()
    }

    /// Fiber Hessian `∂²f/∂y^i∂y^j`, flat row-major `n × n`.
    ///
    /// Mixed partials are always derived in canonical variable order, so
    /// the two index orders share one expression and the matrix is
    /// symmetric exactly.
    pub fn hessian_y<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim;
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_partial(&[Var::Y(i), Var::Y(j)], x, y)?;
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        Ok(out)
    }

    /// Third fiber derivatives `∂³f/∂y^i∂y^j∂y^k`, flat `n × n × n`.
    pub fn third_y<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim;
        let mut out = vec![S::zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = self.eval_partial(&[Var::Y(i), Var::Y(j), Var::Y(k)], x, y)?;
                    // totally symmetric: fill all permutations
                    for (a, b, c) in [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ] {
                        out[(a * n + b) * n + c] = v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∂_{x^k} ∂²_{y^i y^j} f` as a flat `n × n` matrix in `(i, j)`.
    pub fn x_partial_hessian_y<S: Scalar>(&self, k: usize, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim;
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_partial(&[Var::X(k), Var::Y(i), Var::Y(j)], x, y)?;
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        Ok(out)
    }
}

/// Central finite-difference configuration.
#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    /// Base step. The default suits partials of total order ≤ 3; higher
    /// orders need a larger step to stay above roundoff.
    pub h: f64,
    /// Depth of the Richardson table; 1 is the plain O(h²) central
    /// estimate, the default 2 performs one extrapolation, giving O(h⁴).
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            h: 1e-4,
            richardson_levels: 2,
        }
    }
}

impl FdConfig {
    pub fn with_step(h: f64) -> Self {
        FdConfig {
            h,
            ..Default::default()
        }
    }
}

fn shifted(values: &[f64], index: usize, delta: f64) -> Vec<f64> {
    let mut out = values.to_vec();
    out[index] += delta;
    out
}

fn nested_central(f: &ScalarField, x: &[f64], y: &[f64], vars: &[Var], h: f64) -> Result<f64> {
    if vars.is_empty() {
        return f.eval(x, y);
    }
    let rest = &vars[1..];
    let (plus, minus) = match vars[0] {
        Var::X(i) => (
            nested_central(f, &shifted(x, i, h), y, rest, h)?,
            nested_central(f, &shifted(x, i, -h), y, rest, h)?,
        ),
        Var::Y(i) => (
            nested_central(f, x, &shifted(y, i, h), rest, h)?,
            nested_central(f, x, &shifted(y, i, -h), rest, h)?,
        ),
    };
    Ok((plus - minus) / (2.0 * h))
}

/// Independent finite-difference oracle: nested central differences with
/// Richardson extrapolation. Supports multi-indices up to total order 5.
/// Errors if any stencil point leaves the smooth domain.
pub fn fd_partial(f: &ScalarField, x: &[f64], y: &[f64], vars: &[Var], cfg: FdConfig) -> Result<f64> {
    if vars.len() > 5 {
        return Err(Error::Invalid(
            "fd_partial supports multi-indices up to total order 5".into(),
        ));
    }
    if cfg.h <= 0.0 {
        return Err(Error::Invalid("fd step must be positive".into()));
    }
    let levels = cfg.richardson_levels.max(1);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for j in 0..levels {
        let hj = cfg.h / f64::powi(2.0, j as i32);
        let mut row = vec![nested_central(f, x, y, vars, hj)?];
        for k in 1..=j {
            let factor = f64::powi(4.0, k as i32);
            let v = (factor * row[k - 1] - table[j - 1][k - 1]) / (factor - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    Ok(table[levels - 1][levels - 1])
}
