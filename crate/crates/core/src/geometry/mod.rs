//! The metric layer: conic domains, admissibility, fundamental and Cartan
//! tensors, causal classification and observer restspaces.
//!
//! A [`MetricSpec`] holds a 2-homogeneous Lagrangian on a conic domain
//! described by strict inequalities `ineq_k(x, y) > 0`. All tensor
//! evaluation is generic over the scalar, so the connection layer can
//! differentiate through it with dual numbers.

mod families;

pub use families::Family;

use std::any::TypeId;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::expr::{Expression, Params};
use crate::linalg;
use crate::scalar::Scalar;

/// Scale-aware nondegeneracy guard: `|det g| ≥ factor · (max|g_ij|)^n`.
pub const NONDEGENERACY_FACTOR: f64 = 1e-10;

/// Tolerance band used by the causal classifier.
pub const CLASSIFY_BAND: f64 = 1e-9;

/// Declared signature expectation, reported against measurements but never
/// enforced at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureHint {
    PositiveDefinite,
    Lorentz,
}

impl SignatureHint {
    pub fn tag(self) -> &'static str {
        match self {
            SignatureHint::PositiveDefinite => "positive-definite",
            SignatureHint::Lorentz => "lorentz",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "positive-definite" => SignatureHint::PositiveDefinite,
            "lorentz" => SignatureHint::Lorentz,
            _ => return None,
        })
    }
}

/// An admissible-candidate pair `(x, y)`: chart coordinates of a point and
/// components of a tangent direction there.
#[derive(Clone, Debug, PartialEq)]
pub struct PointedDirection {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Whether `(x, y)` satisfied every domain inequality when assessed.
    pub admissible: bool,
}

impl PointedDirection {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        PointedDirection {
            x,
            y,
            admissible: false,
        }
    }

    /// Build with the admissibility flag evaluated against `metric`.
    pub fn assess(metric: &MetricSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let admissible = metric.admissible(&x, &y)?;
        Ok(PointedDirection { x, y, admissible })
    }
}

type GTriple = Arc<(Vec<f64>, Vec<f64>, f64)>;

/// Per-point memo of expensive mid-level objects, keyed by the exact bit
/// patterns of `(x, y)`. Only the `f64` evaluation path consults it.
#[derive(Debug, Default)]
pub(crate) struct PointCache {
    g: RwLock<HashMap<Vec<u64>, GTriple>>,
    gamma: RwLock<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
    spray: RwLock<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
    nonlinear: RwLock<HashMap<Vec<u64>, Arc<Vec<f64>>>>,
}

const CACHE_CAP: usize = 1 << 16;

pub(crate) fn point_key(x: &[f64], y: &[f64]) -> Vec<u64> {
    x.iter().chain(y.iter()).map(|v| v.to_bits()).collect()
}

fn cache_get_or<T>(
    map: &RwLock<HashMap<Vec<u64>, Arc<T>>>,
    key: Vec<u64>,
    compute: impl FnOnce() -> Result<T>,
) -> Result<Arc<T>> {
    if let Some(hit) = map.read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let value = Arc::new(compute()?);
    let mut w = map.write().unwrap();
    if w.len() >= CACHE_CAP {
        w.clear();
    }
    Ok(w.entry(key).or_insert(value).clone())
}

impl PointCache {
    pub(crate) fn g(
        &self,
        key: Vec<u64>,
        compute: impl FnOnce() -> Result<(Vec<f64>, Vec<f64>, f64)>,
    ) -> Result<GTriple> {
        cache_get_or(&self.g, key, compute)
    }

    pub(crate) fn gamma(
        &self,
        key: Vec<u64>,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Arc<Vec<f64>>> {
        cache_get_or(&self.gamma, key, compute)
    }

    pub(crate) fn spray(
        &self,
        key: Vec<u64>,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Arc<Vec<f64>>> {
        cache_get_or(&self.spray, key, compute)
    }

    pub(crate) fn nonlinear(
        &self,
        key: Vec<u64>,
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Arc<Vec<f64>>> {
        cache_get_or(&self.nonlinear, key, compute)
    }
}

/// A pseudo-Finsler metric: dimension, Lagrangian, conic domain and tags.
#[derive(Debug)]
pub struct MetricSpec {
    n: usize,
    lagrangian: ScalarField,
    domain: Vec<ScalarField>,
    family: Family,
    signature_hint: Option<SignatureHint>,
    cache: PointCache,
}

impl MetricSpec {
    /// Build a metric from raw parts, enforcing the structural invariants
    /// that are checkable cheaply: dimension at least 2, indices in range
    /// (guaranteed by parsing), and a domain that excludes the zero
    /// section.
    pub fn custom(
        n: usize,
        lagrangian: Expression,
        domain: Vec<Expression>,
        params: Params,
        signature_hint: Option<SignatureHint>,
    ) -> Result<Self> {
        Self::with_family(n, lagrangian, domain, params, signature_hint, Family::Custom)
    }

    /// Build from explicit parts with a family tag. Files carry the
    /// Lagrangian text directly for every family; the tag drives
    /// family-specific expectations in the verification suite.
    pub fn with_family(
        n: usize,
        lagrangian: Expression,
        domain: Vec<Expression>,
        params: Params,
        signature_hint: Option<SignatureHint>,
        family: Family,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid("metric dimension must be at least 2".into()));
        }
        if domain.is_empty() {
            return Err(Error::Invalid(
                "the domain needs at least one strict inequality".into(),
            ));
        }
        let m = MetricSpec {
            n,
            lagrangian: ScalarField::new(lagrangian, n, params.clone()),
            domain: domain
                .into_iter()
                .map(|e| ScalarField::new(e, n, params.clone()))
                .collect(),
            family,
            signature_hint,
            cache: PointCache::default(),
        };
        m.check_zero_section_excluded()?;
        Ok(m)
    }

    /// The zero section must not be admissible: some inequality has to
    /// fail (or be undefined) at `y = 0`.
    fn check_zero_section_excluded(&self) -> Result<()> {
        let x = vec![0.0; self.n];
        let y = vec![0.0; self.n];
        let excluded = self.domain.iter().any(|ineq| match ineq.eval::<f64>(&x, &y) {
            Ok(v) => v <= 0.0,
            Err(_) => true,
        });
        if excluded {
            Ok(())
        } else {
            Err(Error::Invalid(
                "domain predicate admits the zero section (no inequality fails at y = 0)".into(),
            ))
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn signature_hint(&self) -> Option<SignatureHint> {
        self.signature_hint
    }

    pub fn lagrangian(&self) -> &ScalarField {
        &self.lagrangian
    }

    pub fn domain(&self) -> &[ScalarField] {
        &self.domain
    }

    pub fn params(&self) -> &Params {
        self.lagrangian.params()
    }

    pub(crate) fn point_cache(&self) -> &PointCache {
        &self.cache
    }

    /// True iff every domain inequality is strictly positive and `y ≠ 0`.
    /// Evaluation failure of a predicate is an error, not inadmissibility.
    pub fn admissible(&self, x: &[f64], y: &[f64]) -> Result<bool> {
        if y.iter().all(|v| *v == 0.0) {
            return Ok(false);
        }
        for ineq in &self.domain {
            if ineq.eval::<f64>(x, y)? <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Admissibility on the real parts of a generic point.
    pub fn admissible_values<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<bool> {
        let xf: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let yf: Vec<f64> = y.iter().map(|v| v.value()).collect();
        self.admissible(&xf, &yf)
    }

    fn ensure_admissible<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<()> {
        if self.admissible_values(x, y)? {
            Ok(())
        } else {
            Err(Error::NotAdmissible {
                x: x.iter().map(|v| v.value()).collect(),
                y: y.iter().map(|v| v.value()).collect(),
            })
        }
    }

    /// `L(x, y)`.
    pub fn lagrangian_value<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        self.lagrangian.eval(x, y)
    }

    fn compute_fundamental<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<(Vec<S>, Vec<S>, S)> {
        let n = self.n;
        let hess = self.lagrangian.hessian_y(x, y)?;
        let half = S::from_real(0.5);
        let g: Vec<S> = hess.into_iter().map(|v| v * half).collect();
        let max_abs = g.iter().fold(0.0_f64, |acc, v| acc.max(v.value().abs()));
        let threshold = NONDEGENERACY_FACTOR * max_abs.powi(n as i32);
        let inverted = linalg::invert(&g, n);
        match inverted {
            Some((inv, det)) if det.value().abs() >= threshold && threshold > 0.0 => {
                Ok((g, inv, det))
            }
            Some((_, det)) => Err(Error::DegenerateMetric {
                det: det.value(),
                threshold,
            }),
            None => Err(Error::DegenerateMetric {
                det: 0.0,
                threshold,
            }),
        }
    }

    /// The fundamental tensor `g_ij = ½ ∂²L/∂y^i∂y^j` with its inverse
    /// (LU with partial pivoting) and determinant.
    pub fn fundamental_tensor<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<FundamentalTensor<S>> {
        self.ensure_admissible(x, y)?;
        if TypeId::of::<S>() == TypeId::of::<f64>() {
            let xf: Vec<f64> = x.iter().map(|v| v.value()).collect();
            let yf: Vec<f64> = y.iter().map(|v| v.value()).collect();
            let triple = self.cache.g(point_key(&xf, &yf), || {
                let (g, inv, det) = self.compute_fundamental::<f64>(&xf, &yf)?;
                Ok((g, inv, det))
            })?;
            return Ok(FundamentalTensor {
                n: self.n,
                g: triple.0.iter().map(|v| S::from_real(*v)).collect(),
                inv: triple.1.iter().map(|v| S::from_real(*v)).collect(),
                det: S::from_real(triple.2),
            });
        }
        let (g, inv, det) = self.compute_fundamental(x, y)?;
        Ok(FundamentalTensor {
            n: self.n,
            g,
            inv,
            det,
        })
    }

    /// The Cartan tensor `C_ijk = ¼ ∂³L/∂y^i∂y^j∂y^k`, totally symmetric.
    pub fn cartan_tensor<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<CartanTensor<S>> {
        self.ensure_admissible(x, y)?;
        let third = self.lagrangian.third_y(x, y)?;
        let quarter = S::from_real(0.25);
        Ok(CartanTensor {
            n: self.n,
            c: third.into_iter().map(|v| v * quarter).collect(),
        })
    }

    /// Causal classification by the value of `L`, with a scale-aware
    /// tolerance band. Lightlike directions may sit on the domain
    /// boundary, so classification evaluates `L` even when inequalities
    /// are borderline and reports the boundary status alongside.
    pub fn classify(&self, x: &[f64], y: &[f64]) -> Result<Classification> {
        let value = self.lagrangian.eval::<f64>(x, y)?;
        let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
        let band = CLASSIFY_BAND * scale;
        let class = if (value - 1.0).abs() < band {
            CausalClass::UnitObserver
        } else if value.abs() < band {
            CausalClass::Lightlike
        } else {
            CausalClass::Other
        };
        let mut boundary = false;
        let mut admissible = !y.iter().all(|v| *v == 0.0);
        for ineq in &self.domain {
            let v = ineq.eval::<f64>(x, y)?;
            if v <= 0.0 {
                admissible = false;
            }
            if v < CLASSIFY_BAND {
                boundary = true;
            }
        }
        Ok(Classification {
            value,
            class,
            boundary,
            admissible,
        })
    }

    /// A basis of the `g_v`-orthogonal complement of `v`, built by
    /// Gram-Schmidt of the coordinate directions against `v`.
    pub fn restspace_basis(&self, x: &[f64], y: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        let gt = self.fundamental_tensor::<f64>(x, y)?;
        let l = gt.inner(y, y);
        if l.abs() < CLASSIFY_BAND {
            return Err(Error::Invalid(
                "restspace is undefined for lightlike directions (L(v) = 0)".into(),
            ));
        }
        // Drop the coordinate direction most aligned with v.
        let mut skip = 0;
        let mut best = -1.0;
        for (i, value) in y.iter().enumerate() {
            if value.abs() > best {
                best = value.abs();
                skip = i;
            }
        }
        let mut basis = Vec::with_capacity(n - 1);
        for i in 0..n {
            if i == skip {
                continue;
            }
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let coeff = gt.inner(y, &e) / l;
            for (k, w) in e.iter_mut().enumerate() {
                *w -= coeff * y[k];
            }
            basis.push(e);
        }
        Ok(basis)
    }

    /// The matrix of `g_v` restricted to a restspace basis, with its
    /// definiteness measured by eigenvalue signs.
    pub fn restspace_metric(
        &self,
        x: &[f64],
        y: &[f64],
        basis: &[Vec<f64>],
    ) -> Result<RestspaceMetric> {
        let gt = self.fundamental_tensor::<f64>(x, y)?;
        let m = basis.len();
        let mut matrix = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                matrix[a * m + b] = gt.inner(&basis[a], &basis[b]);
            }
        }
        let eig = linalg::symmetric_eigenvalues(&matrix, m);
        let scale = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let zero_band = 1e-9 * scale.max(1.0);
        let pos = eig.iter().filter(|v| **v > zero_band).count();
        let neg = eig.iter().filter(|v| **v < -zero_band).count();
        let definiteness = if pos == m {
            Definiteness::PositiveDefinite
        } else if neg == m {
            Definiteness::NegativeDefinite
        } else if pos + neg == m {
            Definiteness::Indefinite
        } else {
            Definiteness::Degenerate
        };
        Ok(RestspaceMetric {
            size: m,
            matrix,
            eigenvalues: eig,
            definiteness,
        })
    }

    /// Signature of `g` at `(x, y)` as `(positive, negative, zero)`
    /// eigenvalue counts.
    pub fn signature(&self, x: &[f64], y: &[f64]) -> Result<(usize, usize, usize)> {
        let gt = self.fundamental_tensor::<f64>(x, y)?;
        let eig = linalg::symmetric_eigenvalues(gt.matrix(), self.n);
        let scale = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
        let band = 1e-9 * scale;
        let pos = eig.iter().filter(|v| **v > band).count();
        let neg = eig.iter().filter(|v| **v < -band).count();
        Ok((pos, neg, self.n - pos - neg))
    }
}

/// Symmetric nondegenerate `g_ij(x, y)` with its cached inverse.
#[derive(Clone, Debug)]
pub struct FundamentalTensor<S> {
    n: usize,
    g: Vec<S>,
    inv: Vec<S>,
    det: S,
}

impl<S: Scalar> FundamentalTensor<S> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.g[i * self.n + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> S {
        self.inv[i * self.n + j]
    }

    pub fn det(&self) -> S {
        self.det
    }

    pub fn matrix(&self) -> &[S] {
        &self.g
    }

    pub fn inverse_matrix(&self) -> &[S] {
        &self.inv
    }

    /// `g_v(u, w)`.
    pub fn inner(&self, u: &[S], w: &[S]) -> S {
        let mut acc = S::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc + self.g[i * self.n + j] * u[i] * w[j];
            }
        }
        acc
    }

    /// Rough infinity-norm condition estimate `‖g‖ · ‖g⁻¹‖`.
    pub fn condition_estimate(&self) -> f64 {
        let norm = |m: &[S]| {
            (0..self.n)
                .map(|i| {
                    (0..self.n)
                        .map(|j| m[i * self.n + j].value().abs())
                        .sum::<f64>()
                })
                .fold(0.0_f64, f64::max)
        };
        norm(&self.g) * norm(&self.inv)
    }
}

/// Totally symmetric Cartan tensor `C_ijk`.
#[derive(Clone, Debug)]
pub struct CartanTensor<S> {
    n: usize,
    c: Vec<S>,
}

impl<S: Scalar> CartanTensor<S> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> S {
        self.c[(i * self.n + j) * self.n + k]
    }

    pub fn components(&self) -> &[S] {
        &self.c
    }

    /// Raised form `C^k_ij = g^{kl} C_lij`.
    pub fn raised(&self, g: &FundamentalTensor<S>) -> Vec<S> {
        let n = self.n;
        let mut out = vec![S::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = S::zero();
                    for l in 0..n {
                        acc = acc + g.inv(k, l) * self.get(l, i, j);
                    }
                    out[(k * n + i) * n + j] = acc;
                }
            }
        }
        out
    }

    /// `C_ijk y^k` (vanishes by 0-homogeneity of `g`).
    pub fn contract_direction(&self, y: &[S]) -> Vec<S> {
        let n = self.n;
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero();
                for k in 0..n {
                    acc = acc + self.get(i, j, k) * y[k];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0_f64, |acc, v| acc.max(v.value().abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    /// `L(v) = 1` within the band: an indicatrix point.
    UnitObserver,
    /// `L(v) = 0` within the band.
    Lightlike,
    Other,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub value: f64,
    pub class: CausalClass,
    /// Set when some domain inequality is within the tolerance band of 0,
    /// i.e. the direction sits at the edge of the conic domain.
    pub boundary: bool,
    pub admissible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct RestspaceMetric {
    pub size: usize,
    /// Flat row-major `size × size` matrix of `g_v` on the basis.
    pub matrix: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub definiteness: Definiteness,
}
