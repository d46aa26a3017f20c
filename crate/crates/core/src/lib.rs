//! Computational pseudo-Finsler geometry.
//!
//! The crate evaluates direction-dependent metric data (fundamental and
//! Cartan tensors), the associated sprays and nonlinear connections, the
//! Berwald and Levi-Civita–Chern anisotropic connections, integrates
//! geodesics and two-stage parallel transport along curves, and ships a
//! verification suite that exercises the defining identities numerically.
//!
//! The tensor core is generic over the scalar type ([`scalar::Scalar`],
//! implemented for `f32`/`f64`); [`scalar::Dual`] numbers thread exact
//! derivatives through every pipeline, including matrix inversion.
//! Concrete `f64` aliases are exported at the crate root.

pub mod calculus;
pub mod chart;
pub mod connections;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod scalar;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};

/// Scalar used by the concrete (driver-facing) layers.
pub type Real = f64;

/// One dual layer over [`Real`]: first derivatives.
pub type Dual64 = scalar::Dual<Real>;

/// Two dual layers over [`Real`]: second derivatives.
pub type Dual64x2 = scalar::Dual<scalar::Dual<Real>>;
