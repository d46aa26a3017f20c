//! Anisotropic tensor fields: direction-dependent tensors evaluable at any
//! scalar type, so the derivative operators can seed dual numbers through
//! them.

use std::sync::Arc;

use crate::calculus::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::scalar::Scalar;

/// Components of an `(r, s)` tensor at one point: flat row-major over
/// `[a_1 … a_r, b_1 … b_s]`, each index running over `0..n`.
#[derive(Clone, Debug)]
pub struct TensorData<S> {
    n: usize,
    r: usize,
    s: usize,
    data: Vec<S>,
}

impl<S: Scalar> TensorData<S> {
    pub fn zeros(n: usize, r: usize, s: usize) -> Self {
        TensorData {
            n,
            r,
            s,
            data: vec![S::zero(); n.pow((r + s) as u32)],
        }
    }

    pub fn from_flat(n: usize, r: usize, s: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), n.pow((r + s) as u32));
        TensorData { n, r, s, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.r, self.s)
    }

    pub fn rank(&self) -> usize {
        self.r + self.s
    }

    pub fn flat(&self) -> &[S] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, i| acc * self.n + i)
    }

    /// Indices listed upper-first: `[a_1, …, a_r, b_1, …, b_s]`.
    pub fn get(&self, idx: &[usize]) -> S {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.value().abs()))
    }

    /// Decode a flat offset into its index digits.
    pub fn decode(&self, mut flat: usize) -> Vec<usize> {
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        for pos in (0..rank).rev() {
            idx[pos] = flat % self.n;
            flat /= self.n;
        }
        idx
    }
}

/// A direction-dependent tensor field: components evaluable at `(x, y)`
/// over any scalar. The generic method keeps the trait non-object-safe;
/// consumers stay generic and runtime dispatch goes through enums.
pub trait TensorField: Send + Sync {
    fn dim(&self) -> usize;
    fn valence(&self) -> (usize, usize);
    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>>;

    /// Homogeneity degree in `y`, when known by construction.
    fn homogeneity_degree(&self) -> Option<i32> {
        None
    }
}

/// The fundamental tensor `g` of a metric as a `(0, 2)` field.
#[derive(Clone)]
pub struct MetricTensorField {
    pub metric: Arc<MetricSpec>,
}

impl TensorField for MetricTensorField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn valence(&self) -> (usize, usize) {
        (0, 2)
    }

    fn homogeneity_degree(&self) -> Option<i32> {
        Some(0)
    }

    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>> {
        let g = self.metric.fundamental_tensor(x, y)?;
        Ok(TensorData::from_flat(
            self.metric.dim(),
            0,
            2,
            g.matrix().to_vec(),
        ))
    }
}

/// The Lagrangian as a `(0, 0)` field.
#[derive(Clone)]
pub struct LagrangianField {
    pub metric: Arc<MetricSpec>,
}

impl TensorField for LagrangianField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn valence(&self) -> (usize, usize) {
        (0, 0)
    }

    fn homogeneity_degree(&self) -> Option<i32> {
        Some(2)
    }

    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>> {
        let l = self.metric.lagrangian_value(x, y)?;
        Ok(TensorData::from_flat(self.metric.dim(), 0, 0, vec![l]))
    }
}

/// The Cartan tensor as a `(0, 3)` field.
#[derive(Clone)]
pub struct CartanTensorField {
    pub metric: Arc<MetricSpec>,
}

impl TensorField for CartanTensorField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn valence(&self) -> (usize, usize) {
        (0, 3)
    }

    fn homogeneity_degree(&self) -> Option<i32> {
        Some(-1)
    }

    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>> {
        let c = self.metric.cartan_tensor(x, y)?;
        Ok(TensorData::from_flat(
            self.metric.dim(),
            0,
            3,
            c.components().to_vec(),
        ))
    }
}

/// A tensor field defined componentwise by expressions.
pub struct ExprTensorField {
    n: usize,
    r: usize,
    s: usize,
    components: Vec<ScalarField>,
    homogeneity: Option<i32>,
}

impl ExprTensorField {
    pub fn new(n: usize, r: usize, s: usize, components: Vec<ScalarField>) -> Result<Self> {
        let expect = n.pow((r + s) as u32);
        if components.len() != expect {
            return Err(Error::Invalid(format!(
                "expected {expect} component fields for a ({r},{s}) tensor in dimension {n}"
            )));
        }
        Ok(ExprTensorField {
            n,
            r,
            s,
            components,
            homogeneity: None,
        })
    }

    /// Declare the homogeneity degree in `y` (verified by the suite's
    /// homogeneity check, not assumed).
    pub fn with_homogeneity(mut self, degree: i32) -> Self {
        self.homogeneity = Some(degree);
        self
    }
}

impl TensorField for ExprTensorField {
    fn dim(&self) -> usize {
        self.n
    }

    fn valence(&self) -> (usize, usize) {
        (self.r, self.s)
    }

    fn components<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<TensorData<S>> {
        let data: Result<Vec<S>> = self.components.iter().map(|f| f.eval(x, y)).collect();
        Ok(TensorData::from_flat(self.n, self.r, self.s, data?))
    }

    fn homogeneity_degree(&self) -> Option<i32> {
        self.homogeneity
    }
}
