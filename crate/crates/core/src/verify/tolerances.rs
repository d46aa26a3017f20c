//! Per-check tolerances, kept in one table for auditability.
//!
//! Residuals are scale-aware: a comparison `a ≈ b` is charged against
//! `max(1, |a|, |b|)` unless a check defines its own scale (noted below).

/// Homogeneity of L (degree 2), g (0), C (−1), γ (0), G (2), N (1),
/// Berwald/Chern symbols (0); relative.
pub const HOMOGENEITY: f64 = 1e-9;

/// Euler identities: `∂̇L·y = 2L`, `g_ij y^j = ½ ∂̇_i L`, `g_v(v,v) = L`,
/// `C_ijk y^k = 0` (scaled by `max|C|`), `N^a_i y^i = 2 G^a`.
pub const EULER: f64 = 1e-9;

/// `Γ^a_ij y^j = N^a_i` for both canonical connections, and the
/// round-trip `ν^(∇^ν) = ν`; scaled by `max|N|`.
pub const GAMMA_NONLINEAR: f64 = 1e-9;

/// Exact `∂̇G` against the Cartan-corrected assembly of `N`; relative.
pub const SPRAY_CONSISTENCY: f64 = 1e-8;

/// Torsion of the Berwald and Chern connections; absolute on symbols of
/// order unity (scaled by `max|Γ|` when larger).
pub const TORSION: f64 = 1e-10;

/// `max |(∇g)_{ij|k}|` over samples, scaled by `max|g|`.
pub const METRIC_COMPATIBILITY: f64 = 1e-8;

/// Minimum residual a broken (perturbed) connection must produce, in the
/// same scaling as the check it breaks.
pub const NEGATIVE_CONTROL_FLOOR: f64 = 1e-4;

/// `δ_i L = 0`, scaled by `max(1, |L|)`.
pub const DELTA_L: f64 = 1e-9;

/// `∂̇ g = 2C` cross-check between dual seeding and the symbolic Cartan
/// tensor; relative.
pub const VERTICAL_G: f64 = 1e-9;

/// Chart-change residuals: direct evaluation in the new chart against the
/// cocycle-transformed symbols, scaled by `max|Γ̄|`. The flat-plane polar
/// benchmark is held to the tighter bound.
pub const COCYCLE: f64 = 1e-7;
pub const COCYCLE_POLAR: f64 = 1e-8;

/// Tensoriality of a connection difference under chart change.
pub const COCYCLE_TENSOR: f64 = 1e-9;

/// Transport preservation of `g`-pairings and of `L(V)` at RK4 step 1e-3
/// over unit parameter length (integration-limited).
pub const TRANSPORT_PRESERVATION: f64 = 1e-6;

/// Geodesics from the Chern symbols against the spray route, endpoint
/// difference after unit time at step 1e-3.
pub const GEODESIC_ROUTES: f64 = 1e-8;

/// Transport-derivative recovery against the coordinate formula.
pub const DERIVATIVE_RECOVERY: f64 = 1e-5;

/// Exact partials against the finite-difference oracle, by total order;
/// the error is charged against `max(1, |exact|)`. The steps below keep
/// each nested stencil's truncation and roundoff under the stated bound
/// at double precision for directions with `|y| ≳ 0.7` and a domain
/// slack of 0.6 (the FD samples are drawn that way; an order-k stencil
/// divides by `(2h)^k`, so the roundoff floor rises steeply with the
/// order, while truncation blows up near the cone boundary where the
/// Lagrangian's high derivatives are singular).
pub const FD_REL_LOW_ORDER: f64 = 1e-5;
pub const FD_REL_ORDER5: f64 = 1e-3;
/// Absolute fallback when the exact value is below 1e-3; achievable for
/// first and second partials only — higher-order stencils have a
/// roundoff floor far above it, and their structural zeros cancel
/// exactly anyway.
pub const FD_ABS_SMALL: f64 = 1e-8;
pub const FD_STEP_BY_ORDER: [f64; 5] = [1e-4, 1e-3, 3e-3, 5e-3, 8e-3];

/// Sphere-holonomy regression: angle against `2π(1 − cos θ₀)`.
pub const HOLONOMY: f64 = 1e-4;

/// Cartan tensor of a quadratic (pseudo-Riemannian) metric; absolute.
pub const CARTAN_QUADRATIC: f64 = 1e-12;
