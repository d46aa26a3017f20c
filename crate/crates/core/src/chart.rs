//! Chart changes and the transformation laws of connection coefficients.
//!
//! A [`ChartMap`] stores both coordinate maps as expressions together with
//! their symbolic Jacobians and second derivatives. The induced tangent
//! map is `ȳ^a = (∂x̄^a/∂x^i) y^i`. Connection symbols transform with an
//! inhomogeneous second-derivative term (the cocycle law); differences of
//! connections transform tensorially.

use crate::connections::TensorData;
use crate::error::{Error, Result};
use crate::expr::{differentiate, Expression, Params, Var};
use crate::geometry::MetricSpec;

/// A change of coordinates `(U, x) → (Ū, x̄)` on a validity box.
#[derive(Debug, Clone)]
pub struct ChartMap {
    n: usize,
    /// `x̄^a(x)`, one expression per new coordinate.
    forward: Vec<Expression>,
    /// `x^m(x̄)`, written in the new coordinates.
    inverse: Vec<Expression>,
    /// Validity box in base-chart coordinates.
    validity: Vec<(f64, f64)>,
    params: Params,
    /// `∂x̄^a/∂x^i`, flat `[a][i]`, functions of `x`.
    forward_jac: Vec<Expression>,
    /// `∂²x̄^a/∂x^i∂x^l`, flat `[a][i][l]`, functions of `x`.
    forward_hess: Vec<Expression>,
    /// `∂x^m/∂x̄^i`, flat `[m][i]`, functions of `x̄`.
    inverse_jac: Vec<Expression>,
    /// `∂²x^m/∂x̄^i∂x̄^j`, flat `[m][i][j]`, functions of `x̄`.
    inverse_hess: Vec<Expression>,
}

impl ChartMap {
    pub fn new(
        n: usize,
        forward: Vec<Expression>,
        inverse: Vec<Expression>,
        validity: Vec<(f64, f64)>,
        params: Params,
    ) -> Result<Self> {
        if forward.len() != n || inverse.len() != n || validity.len() != n {
            return Err(Error::Chart(format!(
                "chart in dimension {n} needs {n} forward, {n} inverse expressions and a box"
            )));
        }
        for e in forward.iter().chain(&inverse) {
            if e.depends_on_direction() {
                return Err(Error::Chart(
                    "chart maps are expressions in the base coordinates only".into(),
                ));
            }
        }
        let d = |e: &Expression, i: usize| -> Result<Expression> {
            Ok(differentiate(e, Var::X(i))?)
        };
        let mut forward_jac = Vec::with_capacity(n * n);
        let mut forward_hess = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for i in 0..n {
                forward_jac.push(d(&forward[a], i)?);
            }
        }
        for a in 0..n {
            for i in 0..n {
                for l in 0..n {
                    forward_hess.push(d(&forward_jac[a * n + i], l)?);
                }
            }
        }
        let mut inverse_jac = Vec::with_capacity(n * n);
        let mut inverse_hess = Vec::with_capacity(n * n * n);
        for m in 0..n {
            for i in 0..n {
                inverse_jac.push(d(&inverse[m], i)?);
            }
        }
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    inverse_hess.push(d(&inverse_jac[m * n + i], j)?);
                }
            }
        }
        let chart = ChartMap {
            n,
            forward,
            inverse,
            validity,
            params,
            forward_jac,
            forward_hess,
            inverse_jac,
            inverse_hess,
        };
        chart.check_inverse_consistency()?;
        Ok(chart)
    }

    /// `inverse(forward(x)) = x` to 1e-10 on sampled box points.
    fn check_inverse_consistency(&self) -> Result<()> {
        for x in self.sample_points() {
            let xb = self.to_new(&x)?;
            let back = self.to_old(&xb)?;
            for (a, b) in x.iter().zip(&back) {
                if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
                    return Err(Error::Chart(format!(
                        "forward∘inverse drifts at x = {x:?}: returned {back:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample_points(&self) -> Vec<Vec<f64>> {
        // center plus a fixed lattice of interior points
        let mut points = Vec::new();
        let center: Vec<f64> = self.validity.iter().map(|(a, b)| 0.5 * (a + b)).collect();
        points.push(center.clone());
        for frac in [0.25, 0.75] {
            for i in 0..self.n {
                let mut p = center.clone();
                let (a, b) = self.validity[i];
                p[i] = a + frac * (b - a);
                points.push(p);
            }
        }
        points
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn validity_box(&self) -> &[(f64, f64)] {
        &self.validity
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.validity)
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn eval_vec(&self, exprs: &[Expression], at: &[f64]) -> Result<Vec<f64>> {
        let y = vec![0.0; self.n];
        exprs
            .iter()
            .map(|e| Ok(e.eval(at, &y, &self.params)?))
            .collect()
    }

    /// `x̄ = forward(x)`.
    pub fn to_new(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.forward, x)
    }

    /// `x = inverse(x̄)`.
    pub fn to_old(&self, xb: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.inverse, xb)
    }

    /// `∂x̄^a/∂x^i` at `x`, flat `[a][i]`.
    pub fn forward_jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.forward_jac, x)
    }

    /// `∂²x̄^a/∂x^i∂x^l` at `x`, flat `[a][i][l]`.
    pub fn forward_hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.forward_hess, x)
    }

    /// `∂x^m/∂x̄^i` at `x̄`, flat `[m][i]`.
    pub fn inverse_jacobian(&self, xb: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.inverse_jac, xb)
    }

    /// `∂²x^m/∂x̄^i∂x̄^j` at `x̄`, flat `[m][i][j]`.
    pub fn inverse_hessian(&self, xb: &[f64]) -> Result<Vec<f64>> {
        self.eval_vec(&self.inverse_hess, xb)
    }

    /// Induced tangent map `ȳ^a = (∂x̄^a/∂x^i) y^i`.
    pub fn tangent_to_new(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let jac = self.forward_jacobian(x)?;
        Ok((0..self.n)
            .map(|a| (0..self.n).map(|i| jac[a * self.n + i] * y[i]).sum())
            .collect())
    }

    /// `y^m = (∂x^m/∂x̄^j) ȳ^j`.
    pub fn tangent_to_old(&self, xb: &[f64], yb: &[f64]) -> Result<Vec<f64>> {
        let jac = self.inverse_jacobian(xb)?;
        Ok((0..self.n)
            .map(|m| (0..self.n).map(|j| jac[m * self.n + j] * yb[j]).sum())
            .collect())
    }

    /// Pull a metric back to the new chart: the Lagrangian and every
    /// domain inequality are composed with `x(x̄)` and the tangent map, so
    /// the standard pipeline evaluates tensors directly in the new chart.
    pub fn pull_back_metric(&self, m: &MetricSpec) -> Result<MetricSpec> {
        let n = self.n;
        if m.dim() != n {
            return Err(Error::Chart("chart and metric dimensions differ".into()));
        }
        // ȳ-substitution: y^i = Σ_j (∂x^i/∂x̄^j)(x̄) ȳ^j
        let y_subs: Vec<Expression> = (0..n)
            .map(|i| {
                let mut acc = Expression::num(0.0);
                for j in 0..n {
                    acc = acc.add(&self.inverse_jac[i * n + j].mul(&Expression::y(j, n)));
                }
                acc
            })
            .collect();
        let l_bar = m.lagrangian().expr().compose(&self.inverse, &y_subs, n);
        let domain_bar: Vec<Expression> = m
            .domain()
            .iter()
            .map(|f| f.expr().compose(&self.inverse, &y_subs, n))
            .collect();
        let mut params = m.params().clone();
        for (k, v) in &self.params {
            params.entry(k.clone()).or_insert(*v);
        }
        MetricSpec::custom(n, l_bar, domain_bar, params, m.signature_hint())
    }
}

/// Cocycle law for connection symbols:
/// `Γ̄^a_ij = (∂x̄^a/∂x^m) [ ∂²x^m/∂x̄^i∂x̄^j + (∂x^k/∂x̄^i)(∂x^l/∂x̄^j) Γ^m_kl ]`,
/// with `Γ` evaluated at `(x, y)` and the result indexed in the new chart.
pub fn transform_connection(
    chart: &ChartMap,
    gamma: &[f64],
    x: &[f64],
    xb: &[f64],
) -> Result<Vec<f64>> {
    let n = chart.dim();
    let fj = chart.forward_jacobian(x)?;
    let ij = chart.inverse_jacobian(xb)?;
    let ih = chart.inverse_hessian(xb)?;
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    let mut bracket = ih[(m * n + i) * n + j];
                    for k in 0..n {
                        for l in 0..n {
                            bracket +=
                                ij[k * n + i] * ij[l * n + j] * gamma[(m * n + k) * n + l];
                        }
                    }
                    acc += fj[a * n + m] * bracket;
                }
                out[(a * n + i) * n + j] = acc;
            }
        }
    }
    Ok(out)
}

/// Cocycle law for nonlinear connection coefficients:
/// `N̄^a_j = (∂x^i/∂x̄^j) [ −(∂²x̄^a/∂x^i∂x^l) y^l + (∂x̄^a/∂x^b) N^b_i ]`.
pub fn transform_nonlinear(
    chart: &ChartMap,
    n_coeffs: &[f64],
    x: &[f64],
    y: &[f64],
    xb: &[f64],
) -> Result<Vec<f64>> {
    let n = chart.dim();
    let fj = chart.forward_jacobian(x)?;
    let fh = chart.forward_hessian(x)?;
    let ij = chart.inverse_jacobian(xb)?;
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                let mut bracket = 0.0;
                for l in 0..n {
                    bracket -= fh[(a * n + i) * n + l] * y[l];
                }
                for b in 0..n {
                    bracket += fj[a * n + b] * n_coeffs[b * n + i];
                }
                acc += ij[i * n + j] * bracket;
            }
            out[a * n + j] = acc;
        }
    }
    Ok(out)
}

/// Tensorial transformation: every upper slot contracts with `∂x̄/∂x`,
/// every lower slot with `∂x/∂x̄`; no inhomogeneous term.
pub fn transform_tensor(
    chart: &ChartMap,
    t: &TensorData<f64>,
    x: &[f64],
    xb: &[f64],
) -> Result<TensorData<f64>> {
    let n = chart.dim();
    let (r, s) = t.valence();
    let rank = r + s;
    let fj = chart.forward_jacobian(x)?;
    let ij = chart.inverse_jacobian(xb)?;
    let mut out = TensorData::zeros(n, r, s);
    let size = out.flat().len();
    for flat in 0..size {
        let idx = out.decode(flat);
        let mut acc = 0.0;
        // sum over all source indices
        let source_count = n.pow(rank as u32);
        for src in 0..source_count {
            let sidx = t.decode(src);
            let mut weight = 1.0;
            for pos in 0..r {
                weight *= fj[idx[pos] * n + sidx[pos]];
            }
            for pos in r..rank {
                weight *= ij[sidx[pos] * n + idx[pos]];
            }
            if weight != 0.0 {
                acc += weight * t.flat()[src];
            }
        }
        out.flat_mut()[flat] = acc;
    }
    Ok(out)
}
