//! Connection-level objects: formal Christoffel symbols, geodesic spray,
//! the metric nonlinear connection, the Berwald and Levi-Civita–Chern
//! anisotropic connections, torsion, difference tensors, and covariant /
//! vertical derivatives of anisotropic tensor fields.
//!
//! Coefficient layouts (flat, row-major):
//! - connection symbols `Γ^a_{ij}`: `n³`, index `[a][i][j]`;
//! - nonlinear coefficients `N^a_i`: `n²`, index `[a][i]`.
//!
//! The spray derivative tower is evaluated with dual numbers: `N = ∂̇G`
//! seeds one dual layer, the Berwald symbols `∂̇∂̇G` seed two. An
//! independently assembled Cartan-corrected formula for `N` cross-checks
//! the tower in the test suites.

mod tensor;

pub use tensor::{
    CartanTensorField, ExprTensorField, LagrangianField, MetricTensorField, TensorData,
    TensorField,
};

use std::any::TypeId;
use std::sync::Arc;

use crate::calculus::ScalarField;
use crate::error::Result;
use crate::expr::Var;
use crate::geometry::{point_key, MetricSpec};
use crate::scalar::{lift_constant, seed_direction, Dual, Scalar};

fn to_f64s<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.value()).collect()
}

fn from_f64s<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|x| S::from_real(*x)).collect()
}

fn is_f64<S: Scalar>() -> bool {
    TypeId::of::<S>() == TypeId::of::<f64>()
}

/// `∂g_ij/∂x^k` as a flat `n³` array indexed `[k][i][j]`.
fn partial_x_g<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let half = S::from_real(0.5);
    let mut out = vec![S::zero(); n * n * n];
    for k in 0..n {
        let block = m.lagrangian().x_partial_hessian_y(k, x, y)?;
        for (slot, v) in block.into_iter().enumerate() {
            out[k * n * n + slot] = v * half;
        }
    }
    Ok(out)
}

fn compute_formal_christoffels<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let g = m.fundamental_tensor(x, y)?;
    let dxg = partial_x_g(m, x, y)?;
    let dg = |k: usize, i: usize, j: usize| dxg[(k * n + i) * n + j];
    let half = S::from_real(0.5);
    let mut gamma = vec![S::zero(); n * n * n];
    for a in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = S::zero();
                for k in 0..n {
                    let sym = dg(j, k, i) + dg(i, k, j) - dg(k, i, j);
                    acc = acc + g.inv(a, k) * sym;
                }
                let v = half * acc;
                gamma[(a * n + i) * n + j] = v;
                gamma[(a * n + j) * n + i] = v;
            }
        }
    }
    Ok(gamma)
}

/// Formal Christoffel symbols
/// `γ^a_ij = ½ g^{ak}(∂_{x^j} g_ki + ∂_{x^i} g_kj − ∂_{x^k} g_ij)`:
/// the Levi-Civita formula applied pointwise in `(x, y)`.
pub fn formal_christoffels<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    if is_f64::<S>() {
        let (xf, yf) = (to_f64s(x), to_f64s(y));
        let hit = m
            .point_cache()
            .gamma(point_key(&xf, &yf), || {
                compute_formal_christoffels::<f64>(m, &xf, &yf)
            })?;
        return Ok(from_f64s(&hit));
    }
    compute_formal_christoffels(m, x, y)
}

fn compute_spray<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let gamma = formal_christoffels(m, x, y)?;
    let half = S::from_real(0.5);
    let mut spray = vec![S::zero(); n];
    for a in 0..n {
        let mut acc = S::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + gamma[(a * n + i) * n + j] * y[i] * y[j];
            }
        }
        spray[a] = half * acc;
    }
    Ok(spray)
}

/// Geodesic spray coefficients `G^a = ½ γ^a_ij y^i y^j`; the geodesic
/// equation reads `d²x^a/dt² + 2 G^a(x, dx/dt) = 0`.
pub fn geodesic_spray<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    if is_f64::<S>() {
        let (xf, yf) = (to_f64s(x), to_f64s(y));
        let hit = m
            .point_cache()
            .spray(point_key(&xf, &yf), || compute_spray::<f64>(m, &xf, &yf))?;
        return Ok(from_f64s(&hit));
    }
    compute_spray(m, x, y)
}

fn compute_metric_nonlinear<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let xd = lift_constant(x);
    let mut out = vec![S::zero(); n * n];
    for i in 0..n {
        let yd = seed_direction(y, i);
        let spray: Vec<Dual<S>> = compute_spray(m, &xd, &yd)?;
        for a in 0..n {
            out[a * n + i] = spray[a].d;
        }
    }
    Ok(out)
}

/// The metric nonlinear connection `N^a_i = ∂G^a/∂y^i`, evaluated exactly
/// by seeding a dual layer through the spray.
pub fn metric_nonlinear<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    if is_f64::<S>() {
        let (xf, yf) = (to_f64s(x), to_f64s(y));
        let hit = m.point_cache().nonlinear(point_key(&xf, &yf), || {
            compute_metric_nonlinear::<f64>(m, &xf, &yf)
        })?;
        return Ok(from_f64s(&hit));
    }
    compute_metric_nonlinear(m, x, y)
}

/// Independent second route to the metric nonlinear connection:
/// `N^a_i = γ^a_ij y^j − g^{aj} C_jik γ^k_lm y^l y^m`, assembled from the
/// base-point tensors without any dual seeding.
pub fn cartan_corrected_nonlinear<S: Scalar>(m: &MetricSpec, x: &[S], y: &[S]) -> Result<Vec<S>> {
    let n = m.dim();
    let gamma = compute_formal_christoffels(m, x, y)?;
    let g = m.fundamental_tensor(x, y)?;
    let cartan = m.cartan_tensor(x, y)?;
    // γ^k_lm y^l y^m = 2 G^k
    let mut gyy = vec![S::zero(); n];
    for (k, slot) in gyy.iter_mut().enumerate() {
        let mut acc = S::zero();
        for l in 0..n {
            for mm in 0..n {
                acc = acc + gamma[(k * n + l) * n + mm] * y[l] * y[mm];
            }
        }
        *slot = acc;
    }
    let mut out = vec![S::zero(); n * n];
    for a in 0..n {
        for i in 0..n {
            let mut acc = S::zero();
            for j in 0..n {
                acc = acc + gamma[(a * n + i) * n + j] * y[j];
            }
            for j in 0..n {
                for k in 0..n {
                    acc = acc - g.inv(a, j) * cartan.get(j, i, k) * gyy[k];
                }
            }
            out[a * n + i] = acc;
        }
    }
    Ok(out)
}

/// Horizontal derivative `δ_i f = ∂_{x^i} f − N^a_i ∂_{y^a} f` of a scalar
/// field, using the metric nonlinear connection.
pub fn delta_derivative<S: Scalar>(
    m: &MetricSpec,
    f: &ScalarField,
    x: &[S],
    y: &[S],
    i: usize,
) -> Result<S> {
    let n = m.dim();
    let nl = metric_nonlinear(m, x, y)?;
    let mut out = f.eval_partial(&[Var::X(i)], x, y)?;
    for a in 0..n {
        let dya = f.eval_partial(&[Var::Y(a)], x, y)?;
        out = out - nl[a * n + i] * dya;
    }
    Ok(out)
}

/// Direction-dependent Christoffel symbols `Γ^a_{ij}(x, y)`.
///
/// The generic method keeps the trait non-object-safe by design: callers
/// stay generic (or dispatch through [`AnyConnection`]), and evaluating the
/// coefficients at dual scalars differentiates them exactly.
pub trait Connection: Send + Sync {
    fn dim(&self) -> usize;

    /// Flat `n³` array indexed `[a][i][j]`.
    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>>;

    /// The metric this connection is built from, when there is one;
    /// transports use it for admissibility checks and length diagnostics.
    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        None
    }

    /// Whether the symbols are 0-homogeneous in `y` by construction.
    fn is_homogeneous(&self) -> bool {
        true
    }

    fn provenance(&self) -> &'static str;
}

impl<C: Connection + ?Sized> Connection for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        (**self).coefficients(x, y)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        (**self).metric()
    }

    fn is_homogeneous(&self) -> bool {
        (**self).is_homogeneous()
    }

    fn provenance(&self) -> &'static str {
        (**self).provenance()
    }
}

/// Berwald connection: `Γ^a_ij = ∂̇_j N^a_i` of the metric nonlinear
/// connection, i.e. `∂²G^a/∂y^i∂y^j` through two dual layers.
#[derive(Clone)]
pub struct BerwaldConnection {
    pub metric: Arc<MetricSpec>,
}

impl BerwaldConnection {
    pub fn new(metric: Arc<MetricSpec>) -> Self {
        BerwaldConnection { metric }
    }
}

impl Connection for BerwaldConnection {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        let xd = lift_constant(x);
        let mut out = vec![S::zero(); n * n * n];
        for j in 0..n {
            let yd = seed_direction(y, j);
            let nl: Vec<Dual<S>> = compute_metric_nonlinear(&self.metric, &xd, &yd)?;
            for a in 0..n {
                for i in 0..n {
                    out[(a * n + i) * n + j] = nl[a * n + i].d;
                }
            }
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        Some(&self.metric)
    }

    fn provenance(&self) -> &'static str {
        "berwald"
    }
}

/// Levi-Civita–Chern connection: the unique torsion-free anisotropic
/// connection with `∇g = 0`, computed from
/// `Γ^a_ij = ½ g^{ak}(δ_j g_ki + δ_i g_kj − δ_k g_ij)` where
/// `δ_k = ∂_{x^k} − N^l_k ∂_{y^l}` uses the metric nonlinear connection.
#[derive(Clone)]
pub struct ChernConnection {
    pub metric: Arc<MetricSpec>,
}

impl ChernConnection {
    pub fn new(metric: Arc<MetricSpec>) -> Self {
        ChernConnection { metric }
    }
}

impl Connection for ChernConnection {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let m = &self.metric;
        let n = m.dim();
        let g = m.fundamental_tensor(x, y)?;
        let nl = metric_nonlinear(m, x, y)?;
        let dxg = partial_x_g(m, x, y)?;
        let cartan = m.cartan_tensor(x, y)?;
        // δ_k g_ij = ∂_{x^k} g_ij − N^l_k · 2 C_ijl
        let two = S::from_real(2.0);
        let delta_g = |k: usize, i: usize, j: usize| {
            let mut acc = dxg[(k * n + i) * n + j];
            for l in 0..n {
                acc = acc - nl[l * n + k] * two * cartan.get(i, j, l);
            }
            acc
        };
        let half = S::from_real(0.5);
        let mut out = vec![S::zero(); n * n * n];
        for a in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = S::zero();
                    for k in 0..n {
                        let sym = delta_g(j, k, i) + delta_g(i, k, j) - delta_g(k, i, j);
                        acc = acc + g.inv(a, k) * sym;
                    }
                    let v = half * acc;
                    out[(a * n + i) * n + j] = v;
                    out[(a * n + j) * n + i] = v;
                }
            }
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        Some(&self.metric)
    }

    fn provenance(&self) -> &'static str {
        "chern"
    }
}

/// A connection given by user expressions for its symbols.
pub struct ExprConnection {
    n: usize,
    symbols: Vec<ScalarField>,
    homogeneous: bool,
}

impl ExprConnection {
    /// `symbols` is the flat `n³` array `[a][i][j]` of coefficient fields.
    pub fn new(n: usize, symbols: Vec<ScalarField>, homogeneous: bool) -> Result<Self> {
        if symbols.len() != n * n * n {
            return Err(crate::error::Error::Invalid(format!(
                "expected {} symbol fields, got {}",
                n * n * n,
                symbols.len()
            )));
        }
        Ok(ExprConnection {
            n,
            symbols,
            homogeneous,
        })
    }
}

impl Connection for ExprConnection {
    fn dim(&self) -> usize {
        self.n
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.symbols.iter().map(|f| f.eval(x, y)).collect()
    }

    fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    fn provenance(&self) -> &'static str {
        "custom"
    }
}

/// A connection plus a constant symmetric perturbation of its symbols;
/// the negative control for the uniqueness statements.
pub struct PerturbedConnection<C> {
    pub base: C,
    /// Flat `n³`, `[a][i][j]`; y-independent, hence still 0-homogeneous.
    pub perturbation: Vec<f64>,
}

impl<C: Connection> PerturbedConnection<C> {
    pub fn new(base: C, perturbation: Vec<f64>) -> Self {
        assert_eq!(perturbation.len(), base.dim().pow(3));
        PerturbedConnection { base, perturbation }
    }
}

impl<C: Connection> Connection for PerturbedConnection<C> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let mut out = self.base.coefficients(x, y)?;
        for (slot, p) in out.iter_mut().zip(&self.perturbation) {
            *slot = *slot + S::from_real(*p);
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        self.base.metric()
    }

    fn is_homogeneous(&self) -> bool {
        self.base.is_homogeneous()
    }

    fn provenance(&self) -> &'static str {
        "custom"
    }
}

/// A connection offset by an anisotropic `(1, 2)` tensor field:
/// `Γ = Γ_base + Q`. With a symmetric `Q` satisfying `Q^a_ij y^j = 0`
/// this runs over the distinguished family sharing the base's nonlinear
/// connection (and hence its observer transport and geodesics).
pub struct OffsetConnection<C, Q> {
    pub base: C,
    pub offset: Q,
}

impl<C: Connection, Q: TensorField> OffsetConnection<C, Q> {
    pub fn new(base: C, offset: Q) -> crate::error::Result<Self> {
        if offset.valence() != (1, 2) || offset.dim() != base.dim() {
            return Err(crate::error::Error::Invalid(
                "connection offsets are (1,2) tensor fields of matching dimension".into(),
            ));
        }
        Ok(OffsetConnection { base, offset })
    }
}

impl<C: Connection, Q: TensorField> Connection for OffsetConnection<C, Q> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let mut out = self.base.coefficients(x, y)?;
        let q = self.offset.components(x, y)?;
        for (slot, v) in out.iter_mut().zip(q.flat()) {
            *slot = *slot + *v;
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        self.base.metric()
    }

    fn is_homogeneous(&self) -> bool {
        self.base.is_homogeneous() && self.offset.homogeneity_degree() == Some(0)
    }

    fn provenance(&self) -> &'static str {
        "custom"
    }
}

/// Nonlinear connection coefficients `N^a_i(x, y)`.
pub trait NonlinearConnection: Send + Sync {
    fn dim(&self) -> usize;

    /// Flat `n²` array indexed `[a][i]`.
    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>>;

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        None
    }
}

/// The canonical (metric) nonlinear connection of a metric.
#[derive(Clone)]
pub struct MetricNonlinear {
    pub metric: Arc<MetricSpec>,
}

impl NonlinearConnection for MetricNonlinear {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        metric_nonlinear(&self.metric, x, y)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        Some(&self.metric)
    }
}

/// The nonlinear connection induced by an anisotropic connection:
/// `N^a_i = Γ^a_ij y^j`.
pub struct InducedNonlinear<C> {
    pub connection: C,
}

impl<C: Connection> NonlinearConnection for InducedNonlinear<C> {
    fn dim(&self) -> usize {
        self.connection.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        let gamma = self.connection.coefficients(x, y)?;
        let mut out = vec![S::zero(); n * n];
        for a in 0..n {
            for i in 0..n {
                let mut acc = S::zero();
                for j in 0..n {
                    acc = acc + gamma[(a * n + i) * n + j] * y[j];
                }
                out[a * n + i] = acc;
            }
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        self.connection.metric()
    }
}

/// Nonlinear connection defined by expression coefficients (testing and
/// experimentation).
pub struct ExprNonlinear {
    n: usize,
    fields: Vec<ScalarField>,
}

impl ExprNonlinear {
    pub fn new(n: usize, fields: Vec<ScalarField>) -> Result<Self> {
        if fields.len() != n * n {
            return Err(crate::error::Error::Invalid(
                "nonlinear connection needs n² coefficient fields".into(),
            ));
        }
        Ok(ExprNonlinear { n, fields })
    }
}

impl NonlinearConnection for ExprNonlinear {
    fn dim(&self) -> usize {
        self.n
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.fields.iter().map(|f| f.eval(x, y)).collect()
    }
}

/// The anisotropic connection recovered from a nonlinear connection by
/// `Γ^a_ij = ∂̇_j N^a_i`; homogeneous `N` round-trips to itself.
pub struct FromNonlinear<N> {
    pub nonlinear: N,
}

impl<N: NonlinearConnection> Connection for FromNonlinear<N> {
    fn dim(&self) -> usize {
        self.nonlinear.dim()
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        let n = self.dim();
        let xd = lift_constant(x);
        let mut out = vec![S::zero(); n * n * n];
        for j in 0..n {
            let yd = seed_direction(y, j);
            let nl: Vec<Dual<S>> = self.nonlinear.coefficients(&xd, &yd)?;
            for a in 0..n {
                for i in 0..n {
                    out[(a * n + i) * n + j] = nl[a * n + i].d;
                }
            }
        }
        Ok(out)
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        self.nonlinear.metric()
    }

    fn provenance(&self) -> &'static str {
        "from-nonlinear"
    }
}

/// Runtime-selected connection (CLI and report drivers).
pub enum AnyConnection {
    Berwald(BerwaldConnection),
    Chern(ChernConnection),
    Custom(ExprConnection),
}

impl Connection for AnyConnection {
    fn dim(&self) -> usize {
        match self {
            AnyConnection::Berwald(c) => c.dim(),
            AnyConnection::Chern(c) => c.dim(),
            AnyConnection::Custom(c) => c.dim(),
        }
    }

    fn coefficients<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        match self {
            AnyConnection::Berwald(c) => c.coefficients(x, y),
            AnyConnection::Chern(c) => c.coefficients(x, y),
            AnyConnection::Custom(c) => c.coefficients(x, y),
        }
    }

    fn metric(&self) -> Option<&Arc<MetricSpec>> {
        match self {
            AnyConnection::Berwald(c) => c.metric(),
            AnyConnection::Chern(c) => c.metric(),
            AnyConnection::Custom(c) => c.metric(),
        }
    }

    fn is_homogeneous(&self) -> bool {
        match self {
            AnyConnection::Berwald(c) => c.is_homogeneous(),
            AnyConnection::Chern(c) => c.is_homogeneous(),
            AnyConnection::Custom(c) => c.is_homogeneous(),
        }
    }

    fn provenance(&self) -> &'static str {
        match self {
            AnyConnection::Berwald(c) => c.provenance(),
            AnyConnection::Chern(c) => c.provenance(),
            AnyConnection::Custom(c) => c.provenance(),
        }
    }
}

/// Torsion `Tor^a_ij = Γ^a_ij − Γ^a_ji` as a `(1, 2)` tensor.
pub fn torsion<C: Connection + ?Sized>(c: &C, x: &[f64], y: &[f64]) -> Result<TensorData<f64>> {
    let n = c.dim();
    let gamma = c.coefficients::<f64>(x, y)?;
    let mut out = TensorData::zeros(n, 1, 2);
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v = gamma[(a * n + i) * n + j] - gamma[(a * n + j) * n + i];
                out.set(&[a, i, j], v);
            }
        }
    }
    Ok(out)
}

/// The difference of two connections is a `(1, 2)` anisotropic tensor
/// (its chart transformation has no inhomogeneous term).
pub struct ConnectionDifference<A, B> {
    pub left: A,
    pub right: B,
}

impl<A: Connection, B: Connection> TensorField for ConnectionDifference<A, B> {
    fn dim(&self) -> usize {
        self.left.dim()
    }

    fn valence(&self) -> (usize, usize) {
        (1, 2)
    }

    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>> {
        let a = self.left.coefficients(x, y)?;
        let b = self.right.coefficients(x, y)?;
        let data: Vec<S> = a.iter().zip(&b).map(|(u, v)| *u - *v).collect();
        Ok(TensorData::from_flat(self.left.dim(), 1, 2, data))
    }
}

/// Vertical derivative: appends one covariant slot with `∂_{y^b} T`,
/// evaluated by seeding a dual layer through the field.
pub fn vertical_derivative<T: TensorField + ?Sized>(
    t: &T,
    x: &[f64],
    y: &[f64],
) -> Result<TensorData<f64>> {
    let n = t.dim();
    let (r, s) = t.valence();
    let xd = lift_constant(x);
    let mut out = TensorData::zeros(n, r, s + 1);
    for b in 0..n {
        let yd = seed_direction(y, b);
        let td: TensorData<Dual<f64>> = t.components(&xd, &yd)?;
        for (flat, v) in td.flat().iter().enumerate() {
            out.flat_mut()[flat * n + b] = v.d;
        }
    }
    Ok(out)
}

/// Covariant derivative of an anisotropic tensor field:
///
/// `T^{A}_{B|k} = ∂_k T − Γ^i_{kj} y^j ∂̇_i T + Σ_l Γ^{a_l}_{km} T^{…m…}_B
///  − Σ_l Γ^{m}_{k b_l} T^A_{…m…}`,
///
/// with the new index `k` appended as the last covariant slot.
pub fn covariant_derivative<C: Connection + ?Sized, T: TensorField + ?Sized>(
    c: &C,
    t: &T,
    x: &[f64],
    y: &[f64],
) -> Result<TensorData<f64>> {
    let n = t.dim();
    let (r, s) = t.valence();
    let rank = r + s;
    let gamma = c.coefficients::<f64>(x, y)?;
    let gam = |a: usize, i: usize, j: usize| gamma[(a * n + i) * n + j];
    // N̂^i_k = Γ^i_{kj} y^j for the vertical correction term.
    let mut induced = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            induced[i * n + k] = (0..n).map(|j| gam(i, k, j) * y[j]).sum();
        }
    }
    let base: TensorData<f64> = t.components(x, y)?;
    // ∂_{x^k} T and ∂_{y^i} T by dual seeding.
    let mut dx: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut dy: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let td: TensorData<Dual<f64>> = t.components(&seed_direction(x, k), &lift_constant(y))?;
        dx.push(td.flat().iter().map(|v| v.d).collect());
        let td: TensorData<Dual<f64>> = t.components(&lift_constant(x), &seed_direction(y, k))?;
        dy.push(td.flat().iter().map(|v| v.d).collect());
    }
    let size = base.flat().len();
    let mut out = TensorData::zeros(n, r, s + 1);
    let mut idx = vec![0usize; rank.max(1)];
    for flat in 0..size {
        // decode digits of the base multi-index
        {
            let mut rem = flat;
            for pos in (0..rank).rev() {
                idx[pos] = rem % n;
                rem /= n;
            }
        }
        for k in 0..n {
            let mut v = dx[k][flat];
            for i in 0..n {
                v -= induced[i * n + k] * dy[i][flat];
            }
            // contravariant contractions: swap digit at `pos` for m
            for pos in 0..r {
                let stride = n.pow((rank - 1 - pos) as u32) as isize;
                let a = idx[pos];
                for m in 0..n {
                    let nb = (flat as isize + (m as isize - a as isize) * stride) as usize;
                    v += gam(a, k, m) * base.flat()[nb];
                }
            }
            // covariant contractions
            for pos in r..rank {
                let stride = n.pow((rank - 1 - pos) as u32) as isize;
                let b = idx[pos];
                for m in 0..n {
                    let nb = (flat as isize + (m as isize - b as isize) * stride) as usize;
                    v -= gam(m, k, b) * base.flat()[nb];
                }
            }
            out.flat_mut()[flat * n + k] = v;
        }
    }
    Ok(out)
}
