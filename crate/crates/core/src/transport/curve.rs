//! Curves in chart coordinates: exact parametrizations in `t` or sampled
//! polylines with natural cubic spline interpolation.

use crate::error::{Error, Result};
use crate::expr::{differentiate, Expression, Params, Var};

/// Natural cubic spline through `(t_k, v_k)` knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    ts: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots (natural boundary: zero at ends).
    m2: Vec<f64>,
}

impl CubicSpline {
    pub fn new(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = ts.len();
        if n < 2 || values.len() != n {
            return Err(Error::Invalid(
                "spline needs at least two knots with matching values".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("spline knots must be strictly increasing".into()));
        }
        // Tridiagonal system for the second derivatives (natural ends).
        let mut m2 = vec![0.0; n];
        if n > 2 {
            let dim = n - 2;
            let mut diag = vec![0.0; dim];
            let mut upper = vec![0.0; dim];
            let mut lower = vec![0.0; dim];
            let mut rhs = vec![0.0; dim];
            for k in 0..dim {
                let h0 = ts[k + 1] - ts[k];
                let h1 = ts[k + 2] - ts[k + 1];
                diag[k] = 2.0 * (h0 + h1);
                lower[k] = h0;
                upper[k] = h1;
                rhs[k] = 6.0
                    * ((values[k + 2] - values[k + 1]) / h1 - (values[k + 1] - values[k]) / h0);
            }
            // Thomas algorithm
            for k in 1..dim {
                let w = lower[k] / diag[k - 1];
                diag[k] -= w * upper[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            m2[dim] = rhs[dim - 1] / diag[dim - 1];
            for k in (0..dim - 1).rev() {
                m2[k + 1] = (rhs[k] - upper[k] * m2[k + 2]) / diag[k];
            }
        }
        Ok(CubicSpline { ts, values, m2 })
    }

    fn segment(&self, t: f64) -> usize {
        match self
            .ts
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(k) => k.min(self.ts.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.ts.len() - 2),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.ts[k + 1] - self.ts[k];
        let a = (self.ts[k + 1] - t) / h;
        let b = (t - self.ts[k]) / h;
        a * self.values[k]
            + b * self.values[k + 1]
            + ((a * a * a - a) * self.m2[k] + (b * b * b - b) * self.m2[k + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let h = self.ts[k + 1] - self.ts[k];
        let a = (self.ts[k + 1] - t) / h;
        let b = (t - self.ts[k]) / h;
        (self.values[k + 1] - self.values[k]) / h
            + ((1.0 - 3.0 * a * a) * self.m2[k] + (3.0 * b * b - 1.0) * self.m2[k + 1]) * h / 6.0
    }

    pub fn span(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }
}

#[derive(Debug, Clone)]
enum CurveRepr {
    Parametric {
        position: Vec<Expression>,
        velocity: Vec<Expression>,
        params: Params,
    },
    Spline(Vec<CubicSpline>),
}

/// A smooth curve `γ : [a, b] → M` with an exact velocity evaluator.
#[derive(Debug, Clone)]
pub struct Curve {
    dim: usize,
    a: f64,
    b: f64,
    repr: CurveRepr,
}

impl Curve {
    /// Parametric curve from coordinate expressions in `t`; the velocity
    /// is their exact symbolic derivative.
    pub fn parametric(
        components: Vec<Expression>,
        interval: (f64, f64),
        params: Params,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Invalid("curve needs at least one coordinate".into()));
        }
        if interval.0 >= interval.1 {
            return Err(Error::Invalid("curve interval must be nonempty".into()));
        }
        let velocity: Result<Vec<Expression>> = components
            .iter()
            .map(|e| Ok(differentiate(e, Var::X(0))?))
            .collect();
        Ok(Curve {
            dim: components.len(),
            a: interval.0,
            b: interval.1,
            repr: CurveRepr::Parametric {
                position: components,
                velocity: velocity?,
                params,
            },
        })
    }

    /// Sampled polyline `(t_k, x_k)` with cubic interpolation per
    /// coordinate.
    pub fn from_samples(ts: &[f64], points: &[Vec<f64>]) -> Result<Self> {
        if points.len() != ts.len() || ts.len() < 2 {
            return Err(Error::Invalid("polyline needs matching t and point lists".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Invalid("polyline points must share one dimension".into()));
        }
        let splines: Result<Vec<CubicSpline>> = (0..dim)
            .map(|i| {
                CubicSpline::new(ts.to_vec(), points.iter().map(|p| p[i]).collect())
            })
            .collect();
        Ok(Curve {
            dim,
            a: ts[0],
            b: *ts.last().unwrap(),
            repr: CurveRepr::Spline(splines?),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        match &self.repr {
            CurveRepr::Parametric {
                position, params, ..
            } => position
                .iter()
                .map(|e| Ok(e.eval(&[t], &[0.0], params)?))
                .collect(),
            CurveRepr::Spline(splines) => Ok(splines.iter().map(|s| s.value(t)).collect()),
        }
    }

    pub fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        match &self.repr {
            CurveRepr::Parametric {
                velocity, params, ..
            } => velocity
                .iter()
                .map(|e| Ok(e.eval(&[t], &[0.0], params)?))
                .collect(),
            CurveRepr::Spline(splines) => Ok(splines.iter().map(|s| s.derivative(t)).collect()),
        }
    }
}

/// A vector field along a curve: exact expressions in `t` or samples with
/// cubic interpolation.
#[derive(Debug, Clone)]
pub enum FieldAlongCurve {
    Exprs(Vec<Expression>, Params),
    Sampled(Vec<CubicSpline>),
}

impl FieldAlongCurve {
    pub fn from_samples(ts: &[f64], values: &[Vec<f64>]) -> Result<Self> {
        let dim = values.first().map(|v| v.len()).unwrap_or(0);
        let splines: Result<Vec<CubicSpline>> = (0..dim)
            .map(|i| CubicSpline::new(ts.to_vec(), values.iter().map(|v| v[i]).collect()))
            .collect();
        Ok(FieldAlongCurve::Sampled(splines?))
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldAlongCurve::Exprs(e, _) => e.len(),
            FieldAlongCurve::Sampled(s) => s.len(),
        }
    }

    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        match self {
            FieldAlongCurve::Exprs(exprs, params) => exprs
                .iter()
                .map(|e| Ok(e.eval(&[t], &[0.0], params)?))
                .collect(),
            FieldAlongCurve::Sampled(splines) => Ok(splines.iter().map(|s| s.value(t)).collect()),
        }
    }

    /// Exact derivative for expression fields; a 4th-order central
    /// difference over the interpolant for sampled ones.
    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        match self {
            FieldAlongCurve::Exprs(exprs, params) => exprs
                .iter()
                .map(|e| {
                    let d = differentiate(e, Var::X(0))?;
                    Ok(d.eval(&[t], &[0.0], params)?)
                })
                .collect(),
            FieldAlongCurve::Sampled(splines) => {
                let (a, b) = splines[0].span();
                let h = (b - a) * 1e-4;
                Ok(splines
                    .iter()
                    .map(|s| {
                        (-s.value(t + 2.0 * h) + 8.0 * s.value(t + h) - 8.0 * s.value(t - h)
                            + s.value(t - 2.0 * h))
                            / (12.0 * h)
                    })
                    .collect())
            }
        }
    }
}
