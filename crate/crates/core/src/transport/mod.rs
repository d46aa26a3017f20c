//! Covariant derivatives along curves, geodesic integration and the
//! two-stage parallel transport.
//!
//! The observer leg solves the nonlinear ODE `V̇^a = −Γ^a_jk(γ, V) γ̇^j V^k`
//! (the connection is evaluated at the transported direction itself); the
//! reference leg transports arbitrary vectors linearly with the observer
//! as the direction argument. Both legs integrate as one coupled system
//! with classical fixed-step RK4. Admissibility is checked at every RK4
//! stage; on failure, bisection brackets the exit parameter to 1e-9 and
//! the result is truncated, never extrapolated.

mod curve;

pub use curve::{CubicSpline, Curve, FieldAlongCurve};

use std::sync::Arc;

use crate::connections::{Connection, TensorData, TensorField};
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::linalg;

/// Fixed-step RK4 configuration.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    /// Step size; `None` divides the interval into 1000 steps.
    pub step: Option<f64>,
    pub max_steps: usize,
    /// Integrate the reference leg against a precomputed, interpolated
    /// observer instead of the coupled single-pass system.
    pub decoupled_reference: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            step: None,
            max_steps: 1_000_000,
            decoupled_reference: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        IntegratorConfig {
            step: Some(step),
            ..Default::default()
        }
    }

    fn steps_for(&self, span: f64) -> Result<usize> {
        let steps = match self.step {
            None => 1000,
            Some(h) => {
                if h <= 0.0 {
                    return Err(Error::Invalid("integrator step must be positive".into()));
                }
                (span.abs() / h).ceil().max(1.0) as usize
            }
        };
        if steps > self.max_steps {
            return Err(Error::StepFailure(format!(
                "needs {steps} steps, above the configured maximum {}",
                self.max_steps
            )));
        }
        Ok(steps)
    }
}

/// Integration record shared by geodesics and transports.
struct Integration {
    ts: Vec<f64>,
    states: Vec<Vec<f64>>,
    exit: Option<f64>,
}

/// One RK4 step; `Err` from the derivative signals an inadmissible stage.
fn rk4_step(
    deriv: &mut impl FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    t: f64,
    state: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let k1 = deriv(t, state)?;
    let mid1: Vec<f64> = state
        .iter()
        .zip(&k1)
        .map(|(s, k)| s + 0.5 * h * k)
        .collect();
    let k2 = deriv(t + 0.5 * h, &mid1)?;
    let mid2: Vec<f64> = state
        .iter()
        .zip(&k2)
        .map(|(s, k)| s + 0.5 * h * k)
        .collect();
    let k3 = deriv(t + 0.5 * h, &mid2)?;
    let end: Vec<f64> = state.iter().zip(&k3).map(|(s, k)| s + h * k).collect();
    let k4 = deriv(t + h, &end)?;
    let next: Vec<f64> = (0..state.len())
        .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure("non-finite state".into()));
    }
    Ok(next)
}

/// Drive RK4 from `t0` to `t1`. A failing stage triggers bisection of the
/// step to bracket the exit parameter; the trajectory is truncated there.
fn integrate(
    mut deriv: impl FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    t0: f64,
    t1: f64,
    state0: Vec<f64>,
    cfg: &IntegratorConfig,
) -> Result<Integration> {
    let steps = cfg.steps_for(t1 - t0)?;
    let h = (t1 - t0) / steps as f64;
    let mut ts = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    ts.push(t0);
    states.push(state0);
    let mut exit = None;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let current = states.last().unwrap().clone();
        match rk4_step(&mut deriv, t, &current, h) {
            Ok(next) => {
                ts.push(t0 + (k + 1) as f64 * h);
                states.push(next);
            }
            Err(Error::StepFailure(msg)) => return Err(Error::StepFailure(msg)),
            Err(_) => {
                // Bisect the step fraction to localize the exit parameter.
                let mut lo = 0.0_f64;
                let mut hi = 1.0_f64;
                while (hi - lo) * h.abs() > 1e-9 {
                    let mid = 0.5 * (lo + hi);
                    if rk4_step(&mut deriv, t, &current, h * mid).is_ok() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if lo > 0.0 {
                    if let Ok(next) = rk4_step(&mut deriv, t, &current, h * lo) {
                        ts.push(t + h * lo);
                        states.push(next);
                    }
                }
                exit = Some(t + h * lo);
                break;
            }
        }
    }
    Ok(Integration { ts, states, exit })
}

/// Sampled geodesic data with the energy-conservation diagnostic.
#[derive(Debug, Clone)]
pub struct GeodesicResult {
    pub ts: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// `L(γ̇(t))` per sample when a metric is available.
    pub lagrangian: Vec<f64>,
    /// `max_t |L(γ̇(t)) − L(v₀)|`.
    pub l_drift: f64,
    /// Set when the trajectory left the admissible domain; data above is
    /// truncated at this parameter.
    pub exit: Option<f64>,
}

fn geodesic_from_integration(
    m: Option<&Arc<MetricSpec>>,
    n: usize,
    run: Integration,
) -> Result<GeodesicResult> {
    let mut lagrangian = Vec::with_capacity(run.ts.len());
    if let Some(metric) = m {
        for state in &run.states {
            lagrangian.push(metric.lagrangian_value::<f64>(&state[..n], &state[n..])?);
        }
    }
    let l_drift = if lagrangian.is_empty() {
        0.0
    } else {
        let l0 = lagrangian[0];
        lagrangian
            .iter()
            .fold(0.0_f64, |acc, l| acc.max((l - l0).abs()))
    };
    Ok(GeodesicResult {
        positions: run.states.iter().map(|s| s[..n].to_vec()).collect(),
        velocities: run.states.iter().map(|s| s[n..].to_vec()).collect(),
        ts: run.ts,
        lagrangian,
        l_drift,
        exit: run.exit,
    })
}

/// Integrate the autoparallel equation
/// `ẋ = y, ẏ^a = −Γ^a_ij(x, y) y^i y^j`.
pub fn integrate_geodesic<C: Connection + ?Sized>(
    conn: &C,
    x0: &[f64],
    v0: &[f64],
    interval: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<GeodesicResult> {
    let n = conn.dim();
    let metric = conn.metric().cloned();
    ensure_admissible(metric.as_ref(), x0, v0)?;
    let deriv = |_t: f64, state: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = state.split_at(n);
        ensure_admissible(metric.as_ref(), x, y)?;
        let gamma = conn.coefficients::<f64>(x, y)?;
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(y);
        for a in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += gamma[(a * n + i) * n + j] * y[i] * y[j];
                }
            }
            out[n + a] = -acc;
        }
        Ok(out)
    };
    let mut state0 = x0.to_vec();
    state0.extend_from_slice(v0);
    let run = integrate(deriv, interval.0, interval.1, state0, cfg)?;
    geodesic_from_integration(metric.as_ref(), n, run)
}

/// Integrate the spray form of the geodesic equation,
/// `ẋ = y, ẏ^a = −2 G^a(x, y)`: an independent route that never builds
/// connection symbols.
pub fn integrate_geodesic_spray(
    metric: &Arc<MetricSpec>,
    x0: &[f64],
    v0: &[f64],
    interval: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<GeodesicResult> {
    let n = metric.dim();
    ensure_admissible(Some(metric), x0, v0)?;
    let deriv = |_t: f64, state: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = state.split_at(n);
        ensure_admissible(Some(metric), x, y)?;
        let spray = crate::connections::geodesic_spray::<f64>(metric, x, y)?;
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(y);
        for a in 0..n {
            out[n + a] = -2.0 * spray[a];
        }
        Ok(out)
    };
    let mut state0 = x0.to_vec();
    state0.extend_from_slice(v0);
    let run = integrate(deriv, interval.0, interval.1, state0, cfg)?;
    geodesic_from_integration(Some(metric), n, run)
}

fn ensure_admissible(m: Option<&Arc<MetricSpec>>, x: &[f64], y: &[f64]) -> Result<()> {
    if let Some(metric) = m {
        if !metric.admissible(x, y)? {
            return Err(Error::NotAdmissible {
                x: x.to_vec(),
                y: y.to_vec(),
            });
        }
    }
    Ok(())
}

/// Sampled transport data: observer field, transported vectors and
/// preservation diagnostics.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub ts: Vec<f64>,
    /// Observer `V(t_k)` per sample.
    pub observer: Vec<Vec<f64>>,
    /// Transported vectors: `vectors[w][k]` is the w-th vector at `t_k`.
    pub vectors: Vec<Vec<Vec<f64>>>,
    /// `L(V(t))` per sample when a metric is available.
    pub observer_lagrangian: Vec<f64>,
    /// `max_t |L(V(t)) − L(v)|`.
    pub l_drift: f64,
    /// `max_t max_{i≤j} |g_V(W_i, W_j)(t) − g_v(w_i, w_j)(t₁)|`.
    pub pairing_drift: f64,
    /// Exit parameter when the observer left the admissible domain.
    pub exit: Option<f64>,
}

impl TransportResult {
    pub fn final_observer(&self) -> &[f64] {
        self.observer.last().unwrap()
    }

    pub fn final_vector(&self, w: usize) -> &[f64] {
        self.vectors[w].last().unwrap()
    }
}

/// Instantaneous observer's parallel transport: solve `D^V_γ V = 0` for
/// the self-propagated direction `V` with `V(t1) = v`.
pub fn observer_transport<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<TransportResult> {
    reference_transport(conn, curve, v, &[], t1, t2, cfg)
}

/// Parallel transport with respect to the observer `v`: propagate `V` by
/// the nonlinear leg and every `w` by the linear leg `D^V_γ W = 0`,
/// coupled in one pass (or decoupled when the config asks for it).
pub fn reference_transport<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    ws: &[Vec<f64>],
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<TransportResult> {
    let n = conn.dim();
    let metric = conn.metric().cloned();
    ensure_admissible(metric.as_ref(), &curve.position(t1)?, v)?;
    if t1 == t2 {
        return Err(Error::Invalid("transport needs t1 ≠ t2".into()));
    }
    let run = if cfg.decoupled_reference && !ws.is_empty() {
        decoupled_run(conn, curve, v, ws, t1, t2, cfg)?
    } else {
        coupled_run(conn, curve, v, ws, t1, t2, cfg)?
    };
    assemble_transport(metric.as_ref(), curve, n, ws.len(), run)
}

fn transport_deriv<C: Connection + ?Sized>(
    conn: &C,
    metric: Option<&Arc<MetricSpec>>,
    curve: &Curve,
    n: usize,
    m: usize,
    t: f64,
    state: &[f64],
) -> Result<Vec<f64>> {
    let x = curve.position(t)?;
    let xdot = curve.velocity(t)?;
    let v = &state[..n];
    ensure_admissible(metric, &x, v)?;
    let gamma = conn.coefficients::<f64>(&x, v)?;
    let mut out = vec![0.0; state.len()];
    for block in 0..=m {
        let w = &state[block * n..(block + 1) * n];
        for a in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += gamma[(a * n + j) * n + k] * xdot[j] * w[k];
                }
            }
            out[block * n + a] = -acc;
        }
    }
    Ok(out)
}

fn coupled_run<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    ws: &[Vec<f64>],
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<Integration> {
    let n = conn.dim();
    let m = ws.len();
    let metric = conn.metric().cloned();
    let mut state0 = v.to_vec();
    for w in ws {
        state0.extend_from_slice(w);
    }
    integrate(
        |t, state| transport_deriv(conn, metric.as_ref(), curve, n, m, t, state),
        t1,
        t2,
        state0,
        cfg,
    )
}

/// Pedagogical two-pass mode: the observer is integrated first and the
/// reference leg interpolates it linearly at stage times. The coupled
/// single pass avoids that interpolation error and is the default.
fn decoupled_run<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    ws: &[Vec<f64>],
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<Integration> {
    let n = conn.dim();
    let metric = conn.metric().cloned();
    let observer = coupled_run(conn, curve, v, &[], t1, t2, cfg)?;
    if observer.exit.is_some() {
        return Ok(observer);
    }
    let ts = observer.ts.clone();
    let vstates = observer.states;
    let interpolate = |t: f64| -> Vec<f64> {
        // locate the bracketing grid nodes (uniform grid)
        let h = ts[1] - ts[0];
        let idx = (((t - ts[0]) / h).floor().max(0.0) as usize).min(ts.len() - 2);
        let frac = ((t - ts[idx]) / h).clamp(0.0, 1.0);
        (0..n)
            .map(|i| vstates[idx][i] * (1.0 - frac) + vstates[idx + 1][i] * frac)
            .collect()
    };
    let mut state0 = Vec::new();
    for w in ws {
        state0.extend_from_slice(w);
    }
    let m = ws.len();
    let run = integrate(
        |t, state| {
            let x = curve.position(t)?;
            let xdot = curve.velocity(t)?;
            let vt = interpolate(t);
            ensure_admissible(metric.as_ref(), &x, &vt)?;
            let gamma = conn.coefficients::<f64>(&x, &vt)?;
            let mut out = vec![0.0; state.len()];
            for block in 0..m {
                let w = &state[block * n..(block + 1) * n];
                for a in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            acc += gamma[(a * n + j) * n + k] * xdot[j] * w[k];
                        }
                    }
                    out[block * n + a] = -acc;
                }
            }
            Ok(out)
        },
        t1,
        t2,
        state0,
        cfg,
    )?;
    // stitch observer and vectors back into the coupled layout
    let mut states = Vec::with_capacity(run.ts.len());
    for (k, s) in run.states.iter().enumerate() {
        let mut full = vstates[k.min(vstates.len() - 1)].clone();
        full.extend_from_slice(s);
        states.push(full);
    }
    Ok(Integration {
        ts: run.ts,
        states,
        exit: run.exit,
    })
}

fn assemble_transport(
    metric: Option<&Arc<MetricSpec>>,
    curve: &Curve,
    n: usize,
    m: usize,
    run: Integration,
) -> Result<TransportResult> {
    let observer: Vec<Vec<f64>> = run.states.iter().map(|s| s[..n].to_vec()).collect();
    let vectors: Vec<Vec<Vec<f64>>> = (0..m)
        .map(|w| {
            run.states
                .iter()
                .map(|s| s[(w + 1) * n..(w + 2) * n].to_vec())
                .collect()
        })
        .collect();
    let mut observer_lagrangian = Vec::new();
    let mut pairing_drift = 0.0_f64;
    let mut l_drift = 0.0_f64;
    if let Some(metric) = metric {
        let mut base_pairings: Option<Vec<f64>> = None;
        let mut l0 = 0.0;
        for (k, t) in run.ts.iter().enumerate() {
            let x = curve.position(*t)?;
            let vt = &observer[k];
            let l = metric.lagrangian_value::<f64>(&x, vt)?;
            if k == 0 {
                l0 = l;
            }
            l_drift = l_drift.max((l - l0).abs());
            observer_lagrangian.push(l);
            if m > 0 {
                let g = metric.fundamental_tensor::<f64>(&x, vt)?;
                let mut pairings = Vec::with_capacity(m * (m + 1) / 2);
                for i in 0..m {
                    for j in i..m {
                        pairings.push(g.inner(&vectors[i][k], &vectors[j][k]));
                    }
                }
                match &base_pairings {
                    None => base_pairings = Some(pairings),
                    Some(base) => {
                        for (p, b) in pairings.iter().zip(base) {
                            pairing_drift = pairing_drift.max((p - b).abs());
                        }
                    }
                }
            }
        }
    }
    Ok(TransportResult {
        ts: run.ts,
        observer,
        vectors,
        observer_lagrangian,
        l_drift,
        pairing_drift,
        exit: run.exit,
    })
}

/// Transport the coordinate basis along the curve in one coupled pass and
/// return the matrix `M` of `P^v_{t1,t2}` (columns are transported basis
/// vectors) together with the transported observer.
pub fn transport_matrix<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = conn.dim();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let result = reference_transport(conn, curve, v, &basis, t1, t2, cfg)?;
    if let Some(t) = result.exit {
        return Err(Error::DomainExit { t });
    }
    let mut matrix = vec![0.0; n * n];
    for (j, column) in (0..n).map(|w| result.final_vector(w)).enumerate() {
        for i in 0..n {
            matrix[i * n + j] = column[i];
        }
    }
    Ok((matrix, result.final_observer().to_vec()))
}

fn contract_point_tensor(
    t: &TensorData<f64>,
    upper: &[f64],
    lower: &[f64],
    n: usize,
) -> TensorData<f64> {
    let (r, s) = t.valence();
    let rank = r + s;
    let mut out = TensorData::zeros(n, r, s);
    let size = out.flat().len();
    for flat in 0..size {
        let idx = out.decode(flat);
        let mut acc = 0.0;
        for src in 0..size {
            let sidx = t.decode(src);
            let mut weight = 1.0;
            for pos in 0..r {
                weight *= upper[idx[pos] * n + sidx[pos]];
            }
            for pos in r..rank {
                weight *= lower[sidx[pos] * n + idx[pos]];
            }
            if weight != 0.0 {
                acc += weight * t.flat()[src];
            }
        }
        out.flat_mut()[flat] = acc;
    }
    out
}

/// Transport a point tensor from `γ(t1)` to `γ(t2)` with respect to the
/// observer `v`: vector slots ride the linear transport, covector slots
/// its inverse-dual, so pairings of transported slots are constant.
pub fn tensor_transport<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    v: &[f64],
    tensor: &TensorData<f64>,
    t1: f64,
    t2: f64,
    cfg: &IntegratorConfig,
) -> Result<TensorData<f64>> {
    let n = conn.dim();
    let (matrix, _) = transport_matrix(conn, curve, v, t1, t2, cfg)?;
    let (inv, _) = linalg::invert(&matrix, n)
        .ok_or_else(|| Error::StepFailure("transport matrix is singular".into()))?;
    Ok(contract_point_tensor(tensor, &matrix, &inv, n))
}

/// Evaluate the transported-tensor curve `P_t(T)_v` at parameter `t`:
/// the field at the transported observer, with every slot pulled back to
/// `γ(a)` through the transport (upper slots with `M⁻¹`, lower with `M`).
pub fn transported_field_pullback<C: Connection + ?Sized, T: TensorField + ?Sized>(
    conn: &C,
    curve: &Curve,
    field: &T,
    v: &[f64],
    a: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<TensorData<f64>> {
    let n = conn.dim();
    if (t - a).abs() < 1e-300 {
        let x = curve.position(a)?;
        return field.components::<f64>(&x, v);
    }
    let (matrix, observer) = transport_matrix(conn, curve, v, a, t, cfg)?;
    let (inv, _) = linalg::invert(&matrix, n)
        .ok_or_else(|| Error::StepFailure("transport matrix is singular".into()))?;
    let x = curve.position(t)?;
    let data = field.components::<f64>(&x, &observer)?;
    Ok(contract_point_tensor(&data, &inv, &matrix, n))
}

/// Step used by [`recover_nabla`]'s central difference in `t`.
pub const NABLA_RECOVERY_STEP: f64 = 1e-3;

/// Recover the covariant derivative from transport:
/// `(∇_{γ̇(a)} T)_v = d/dt P_t(T)_v |_{t=a}`, estimated with a 4th-order
/// central difference over short two-sided transports.
pub fn recover_nabla<C: Connection + ?Sized, T: TensorField + ?Sized>(
    conn: &C,
    curve: &Curve,
    field: &T,
    v: &[f64],
    a: f64,
    cfg: &IntegratorConfig,
) -> Result<TensorData<f64>> {
    let h = NABLA_RECOVERY_STEP;
    // enough resolution for the short legs regardless of the outer step
    let leg_cfg = IntegratorConfig {
        step: Some(cfg.step.unwrap_or(h / 8.0).min(h / 8.0)),
        ..*cfg
    };
    let eval = |t: f64| transported_field_pullback(conn, curve, field, v, a, t, &leg_cfg);
    let p2 = eval(a + 2.0 * h)?;
    let p1 = eval(a + h)?;
    let m1 = eval(a - h)?;
    let m2 = eval(a - 2.0 * h)?;
    let (r, s) = field.valence();
    let n = field.dim();
    let mut out = TensorData::zeros(n, r, s);
    for flat in 0..out.flat().len() {
        out.flat_mut()[flat] = (-p2.flat()[flat] + 8.0 * p1.flat()[flat] - 8.0 * m1.flat()[flat]
            + m2.flat()[flat])
            / (12.0 * h);
    }
    Ok(out)
}

/// Covariant derivative along a curve with reference field `W`:
/// `D^W_γ X = (Ẋ^i + Γ^i_jk(γ, W) γ̇^j X^k) ∂_i`.
pub fn covariant_derivative_along_curve<C: Connection + ?Sized>(
    conn: &C,
    curve: &Curve,
    reference: &FieldAlongCurve,
    field: &FieldAlongCurve,
    t: f64,
) -> Result<Vec<f64>> {
    let n = conn.dim();
    let x = curve.position(t)?;
    let xdot = curve.velocity(t)?;
    let w = reference.value(t)?;
    ensure_admissible(conn.metric(), &x, &w)?;
    let gamma = conn.coefficients::<f64>(&x, &w)?;
    let xv = field.value(t)?;
    let mut out = field.derivative(t)?;
    for (a, slot) in out.iter_mut().enumerate() {
        for j in 0..n {
            for k in 0..n {
                *slot += gamma[(a * n + j) * n + k] * xdot[j] * xv[k];
            }
        }
    }
    Ok(out)
}
