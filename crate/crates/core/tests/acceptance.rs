//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p finsler --test acceptance -- --nocapture`
//! to see every line.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use finsler::calculus::{fd_partial, FdConfig, ScalarField};
use finsler::chart::{transform_connection, transform_nonlinear, transform_tensor, ChartMap};
use finsler::connections::{
    cartan_corrected_nonlinear, covariant_derivative, formal_christoffels, geodesic_spray,
    metric_nonlinear, torsion, BerwaldConnection, ChernConnection, Connection,
    ConnectionDifference, ExprTensorField, FromNonlinear, InducedNonlinear, MetricNonlinear,
    MetricTensorField, NonlinearConnection, PerturbedConnection, TensorData, TensorField,
};
use finsler::expr::{parse, parse_curve_component, Params, Var};
use finsler::geometry::{MetricSpec, PointedDirection, SignatureHint};
use finsler::transport::{
    integrate_geodesic, integrate_geodesic_spray, recover_nabla, reference_transport, Curve,
    IntegratorConfig,
};
use finsler::verify::{sampler, SampleBoxes};

fn conclude(criterion: u32, what: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("PASS criterion {criterion}: {what}"),
        Err(e) => {
            println!("FAIL criterion {criterion}: {what} -- {e}");
            panic!("criterion {criterion} failed: {e}");
        }
    }
}

fn expdiag() -> Arc<MetricSpec> {
    let entries = [
        parse("1", 2).unwrap(),
        parse("0", 2).unwrap(),
        parse("0", 2).unwrap(),
        parse("exp(2*x0)", 2).unwrap(),
    ];
    Arc::new(
        MetricSpec::pseudo_riemannian(2, &entries, Params::new(), SignatureHint::PositiveDefinite)
            .unwrap(),
    )
}

fn randers() -> Arc<MetricSpec> {
    let a = [
        parse("1", 2).unwrap(),
        parse("0", 2).unwrap(),
        parse("0", 2).unwrap(),
        parse("exp(2*x0)", 2).unwrap(),
    ];
    let b = [parse("0.3", 2).unwrap(), parse("0", 2).unwrap()];
    Arc::new(MetricSpec::randers(2, &a, &b, Params::new()).unwrap())
}

fn lorentz_example() -> Arc<MetricSpec> {
    Arc::new(MetricSpec::lorentz_finsler_example(2, 0.1).unwrap())
}

fn samples_for(m: &Arc<MetricSpec>, seed: u64, count: usize) -> Vec<PointedDirection> {
    let boxes = SampleBoxes::for_metric(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sampler::draw_many(m, &boxes, &mut rng, count).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

#[test]
fn c01_riemannian_reduction() {
    conclude(1, "Berwald, Chern and formal symbols reduce to Levi-Civita", (|| {
        let m = expdiag();
        let berwald = BerwaldConnection::new(m.clone());
        let chern = ChernConnection::new(m.clone());
        for s in samples_for(&m, 1, 10) {
            let n = 2;
            let e2 = (2.0 * s.x[0]).exp();
            let gamma = formal_christoffels::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?;
            let b = berwald.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
            let c = chern.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
            for coeffs in [&gamma, &b, &c] {
                let gam = |a: usize, i: usize, j: usize| coeffs[(a * n + i) * n + j];
                check((gam(1, 0, 1) - 1.0).abs() < 1e-9, "Γ^1_01 ≠ 1")?;
                check((gam(1, 1, 0) - 1.0).abs() < 1e-9, "Γ^1_10 ≠ 1")?;
                check(
                    (gam(0, 1, 1) + e2).abs() < 1e-9 * e2.max(1.0),
                    "Γ^0_11 ≠ -e^{2x0}",
                )?;
                for (a, i, j) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
                    check(gam(a, i, j).abs() < 1e-9, format!("Γ^{a}_{i}{j} ≠ 0"))?;
                }
            }
            let cartan = m.cartan_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
            check(cartan.max_abs() < 1e-12, "Cartan tensor above 1e-12")?;
        }
        Ok(())
    })());
}

#[test]
fn c02_chern_metric_compatibility() {
    conclude(2, "∇g = 0 for the Chern connection on both families", (|| {
        for (name, m) in [("randers", randers()), ("lorentz-finsler", lorentz_example())] {
            let chern = ChernConnection::new(m.clone());
            let g_field = MetricTensorField { metric: m.clone() };
            for s in samples_for(&m, 2, 100) {
                let g = m.fundamental_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
                let scale = max_abs(g.matrix()).max(1.0);
                let nabla =
                    covariant_derivative(&chern, &g_field, &s.x, &s.y).map_err(|e| e.to_string())?;
                check(
                    nabla.max_abs() < 1e-8 * scale,
                    format!("{name}: |∇g| = {} at {:?}", nabla.max_abs(), s.x),
                )?;
            }
        }
        Ok(())
    })());
}

#[test]
fn c03_torsion_free() {
    conclude(3, "Chern and Berwald connections are torsion-free", (|| {
        for m in [randers(), lorentz_example()] {
            let berwald = BerwaldConnection::new(m.clone());
            let chern = ChernConnection::new(m.clone());
            for s in samples_for(&m, 2, 100) {
                let tb = torsion(&berwald, &s.x, &s.y).map_err(|e| e.to_string())?;
                let tc = torsion(&chern, &s.x, &s.y).map_err(|e| e.to_string())?;
                check(tb.max_abs() < 1e-10, format!("Berwald torsion {}", tb.max_abs()))?;
                check(tc.max_abs() < 1e-10, format!("Chern torsion {}", tc.max_abs()))?;
            }
        }
        Ok(())
    })());
}

#[test]
fn c04_gamma_nonlinear_correspondence() {
    conclude(4, "Γ·y = N for both connections and the round-trip is exact", (|| {
        for m in [randers(), lorentz_example()] {
            let berwald = BerwaldConnection::new(m.clone());
            let chern = ChernConnection::new(m.clone());
            let n = m.dim();
            for s in samples_for(&m, 3, 100) {
                let nl = metric_nonlinear::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?;
                let scale = max_abs(&nl).max(1.0);
                for coeffs in [
                    berwald.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?,
                    chern.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?,
                ] {
                    for a in 0..n {
                        for i in 0..n {
                            let contracted: f64 =
                                (0..n).map(|j| coeffs[(a * n + i) * n + j] * s.y[j]).sum();
                            check(
                                (contracted - nl[a * n + i]).abs() < 1e-9 * scale,
                                format!("Γy ≠ N: {} vs {}", contracted, nl[a * n + i]),
                            )?;
                        }
                    }
                }
                // round-trip ν^{∇^ν} = ν
                let from_n = FromNonlinear {
                    nonlinear: MetricNonlinear { metric: m.clone() },
                };
                let induced = InducedNonlinear { connection: from_n };
                let back = induced.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
                for (u, v) in back.iter().zip(&nl) {
                    check(
                        (u - v).abs() < 1e-9 * scale,
                        format!("round-trip {u} vs {v}"),
                    )?;
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn c05_spray_consistency() {
    conclude(5, "∂G/∂y matches the Cartan-corrected formula; both geodesic routes coincide", (|| {
        let m = randers();
        for s in samples_for(&m, 5, 100) {
            let via_dual = metric_nonlinear::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?;
            let assembled =
                cartan_corrected_nonlinear::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?;
            let scale = max_abs(&via_dual).max(1.0);
            for (a, b) in via_dual.iter().zip(&assembled) {
                check((a - b).abs() < 1e-8 * scale, format!("N routes: {a} vs {b}"))?;
            }
        }
        // geodesics: Γ-route vs spray-route after unit parameter time at h = 1e-3
        let chern = ChernConnection::new(m.clone());
        let cfg = IntegratorConfig::with_step(1e-3);
        let x0 = [0.1, -0.2];
        let v0 = [1.0, 0.3];
        let a = integrate_geodesic(&chern, &x0, &v0, (0.0, 1.0), &cfg).map_err(|e| e.to_string())?;
        let b = integrate_geodesic_spray(&m, &x0, &v0, (0.0, 1.0), &cfg).map_err(|e| e.to_string())?;
        check(a.exit.is_none() && b.exit.is_none(), "geodesic left the domain")?;
        let (ea, eb) = (a.positions.last().unwrap(), b.positions.last().unwrap());
        for i in 0..2 {
            check(
                (ea[i] - eb[i]).abs() < 1e-8,
                format!("trajectories diverge: {} vs {}", ea[i], eb[i]),
            )?;
        }
        Ok(())
    })());
}

#[test]
fn c06_transport_preservation_with_negative_control() {
    conclude(6, "transport preserves g-pairings and L; a perturbed connection does not", (|| {
        let m = randers();
        let chern = ChernConnection::new(m.clone());
        let curve = Curve::parametric(
            vec![
                parse_curve_component("0.4*sin(2*pi*t)").unwrap(),
                parse_curve_component("0.4*(1 - cos(2*pi*t))").unwrap(),
            ],
            (0.0, 1.0),
            Params::new(),
        )
        .unwrap();
        let cfg = IntegratorConfig::with_step(1e-3);
        let boxes = SampleBoxes::for_metric(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let anchor = curve.position(0.0).unwrap();
        for _ in 0..5 {
            let v = sampler::draw_direction_at(&m, &boxes, &anchor, &mut rng)
                .map_err(|e| e.to_string())?;
            let w1 = sampler::draw_vector(&boxes, &mut rng);
            let w2 = sampler::draw_vector(&boxes, &mut rng);
            let r = reference_transport(&chern, &curve, &v, &[w1, w2], 0.0, 1.0, &cfg)
                .map_err(|e| e.to_string())?;
            check(r.exit.is_none(), "unexpected domain exit")?;
            check(
                r.pairing_drift < 1e-6,
                format!("pairing drift {}", r.pairing_drift),
            )?;
            check(r.l_drift < 1e-6, format!("L(V) drift {}", r.l_drift))?;
        }
        // negative control: Chern + symmetric Q with Q·y ≠ 0
        let n = 2;
        let mut p = vec![0.0; n * n * n];
        p[0] = 0.05; // P^0_00
        p[(1 * n) * n + 1] = 0.04; // P^1_01
        p[(1 * n + 1) * n] = 0.04; // P^1_10
        let broken = PerturbedConnection::new(ChernConnection::new(m.clone()), p);
        let v = sampler::draw_direction_at(&m, &boxes, &anchor, &mut rng)
            .map_err(|e| e.to_string())?;
        let r = reference_transport(
            &broken,
            &curve,
            &v,
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            0.0,
            1.0,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        check(
            r.pairing_drift > 1e-4,
            format!("negative control too quiet: {}", r.pairing_drift),
        )?;
        Ok(())
    })());
}

#[test]
fn c07_derivative_recovery() {
    conclude(7, "d/dt P_t(T) at t=a equals ∇T contracted with the velocity", (|| {
        let m = randers();
        let berwald = BerwaldConnection::new(m.clone());
        let chern = ChernConnection::new(m.clone());
        let curve = Curve::parametric(
            vec![
                parse_curve_component("0.3*sin(t)").unwrap(),
                parse_curve_component("0.25*t").unwrap(),
            ],
            (-0.5, 1.0),
            Params::new(),
        )
        .unwrap();
        let a = 0.1;
        let cfg = IntegratorConfig::default();
        let g_field = MetricTensorField { metric: m.clone() };
        // deterministic random (1,1) anisotropic field
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut fields = Vec::new();
        for _ in 0..4 {
            let c0: f64 = rng.gen_range(-0.5..0.5);
            let c1: f64 = rng.gen_range(-0.5..0.5);
            let c2: f64 = rng.gen_range(-0.5..0.5);
            let text = format!("{c0:?} + {c1:?}*sin(x0) + {c2:?}*y0*y1/(y0^2 + y1^2)");
            fields.push(ScalarField::new(parse(&text, 2).unwrap(), 2, Params::new()));
        }
        let random_field = ExprTensorField::new(2, 1, 1, fields).unwrap();

        let x = curve.position(a).unwrap();
        let xdot = curve.velocity(a).unwrap();
        let boxes = SampleBoxes::for_metric(&m);
        let observers: Vec<Vec<f64>> = (0..3)
            .map(|_| sampler::draw_direction_at(&m, &boxes, &x, &mut rng).unwrap())
            .collect();

        for conn_name in ["chern", "berwald"] {
            let is_b = conn_name == "berwald";
            for field_name in ["g", "random"] {
                for v in &observers {
                    let (rec, nabla) = if field_name == "g" {
                        let rec = if is_b {
                            recover_nabla(&berwald, &curve, &g_field, v, a, &cfg)
                        } else {
                            recover_nabla(&chern, &curve, &g_field, v, a, &cfg)
                        }
                        .map_err(|e| e.to_string())?;
                        let nabla = if is_b {
                            covariant_derivative(&berwald, &g_field, &x, v)
                        } else {
                            covariant_derivative(&chern, &g_field, &x, v)
                        }
                        .map_err(|e| e.to_string())?;
                        (rec, nabla)
                    } else {
                        let rec = if is_b {
                            recover_nabla(&berwald, &curve, &random_field, v, a, &cfg)
                        } else {
                            recover_nabla(&chern, &curve, &random_field, v, a, &cfg)
                        }
                        .map_err(|e| e.to_string())?;
                        let nabla = if is_b {
                            covariant_derivative(&berwald, &random_field, &x, v)
                        } else {
                            covariant_derivative(&chern, &random_field, &x, v)
                        }
                        .map_err(|e| e.to_string())?;
                        (rec, nabla)
                    };
                    let scale = rec.max_abs().max(1.0);
                    for flat in 0..rec.flat().len() {
                        let idx = rec.decode(flat);
                        let mut contracted = 0.0;
                        for k in 0..2 {
                            let mut full = idx.clone();
                            full.push(k);
                            contracted += nabla.get(&full) * xdot[k];
                        }
                        check(
                            (rec.flat()[flat] - contracted).abs() < 1e-5 * scale,
                            format!(
                                "{conn_name}/{field_name}: recovered {} vs formula {}",
                                rec.flat()[flat],
                                contracted
                            ),
                        )?;
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn c08_sphere_holonomy_and_rk4_order() {
    conclude(8, "latitude-loop holonomy matches 2π(1−cos θ₀); halving h cuts the error ~16x", (|| {
        let m = Arc::new(MetricSpec::sphere_surface().unwrap());
        let chern = ChernConnection::new(m.clone());
        let theta0 = std::f64::consts::FRAC_PI_4;
        let two_pi = 2.0 * std::f64::consts::PI;
        let curve = Curve::parametric(
            vec![
                parse_curve_component("pi/4").unwrap(),
                parse_curve_component("t").unwrap(),
            ],
            (0.0, two_pi),
            Params::new(),
        )
        .unwrap();
        let expected = two_pi * (1.0 - theta0.cos());
        let w0 = vec![1.0, 0.0];
        let v = [1.0, 0.0];
        let angle_at = |steps: usize| -> Result<f64, String> {
            let cfg = IntegratorConfig::with_step(two_pi / steps as f64);
            let r = reference_transport(&chern, &curve, &v, &[w0.clone()], 0.0, two_pi, &cfg)
                .map_err(|e| e.to_string())?;
            let w = r.final_vector(0);
            let x = curve.position(0.0).unwrap();
            let g = m.fundamental_tensor::<f64>(&x, &v).map_err(|e| e.to_string())?;
            let cosang =
                g.inner(&w0, w) / (g.inner(&w0, &w0).sqrt() * g.inner(w, w).sqrt());
            Ok(cosang.clamp(-1.0, 1.0).acos())
        };
        let fine = angle_at(1000)?;
        check(
            (fine - expected).abs() < 1e-4,
            format!("holonomy {fine} vs {expected}"),
        )?;
        let e1 = (angle_at(100)? - expected).abs();
        let e2 = (angle_at(200)? - expected).abs();
        let ratio = e1 / e2;
        check(
            (10.0..24.0).contains(&ratio),
            format!("RK4 order ratio {ratio} (e1={e1:.3e}, e2={e2:.3e})"),
        )?;
        Ok(())
    })());
}

#[test]
fn c09_cocycle_laws() {
    conclude(9, "polar and shear chart changes obey the cocycle laws; Q is tensorial", (|| {
        // flat plane, Cartesian -> polar
        let polar = ChartMap::new(
            2,
            vec![
                parse("sqrt(x0^2 + x1^2)", 2).unwrap(),
                parse("atan(x1/x0)", 2).unwrap(),
            ],
            vec![
                parse("x0*cos(x1)", 2).unwrap(),
                parse("x0*sin(x1)", 2).unwrap(),
            ],
            vec![(0.6, 2.0), (-0.6, 0.6)],
            Params::new(),
        )
        .map_err(|e| e.to_string())?;
        let flat = Arc::new(MetricSpec::euclidean(2).unwrap());
        let pulled = Arc::new(polar.pull_back_metric(&flat).map_err(|e| e.to_string())?);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let x = [rng.gen_range(0.7..1.9), rng.gen_range(-0.5..0.5)];
            let y = [rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0)];
            let xb = polar.to_new(&x).map_err(|e| e.to_string())?;
            let yb = polar.tangent_to_new(&x, &y).map_err(|e| e.to_string())?;
            let r = xb[0];
            let direct = formal_christoffels::<f64>(&pulled, &xb, &yb).map_err(|e| e.to_string())?;
            let gam = |g: &[f64], a: usize, i: usize, j: usize| g[(a * 2 + i) * 2 + j];
            check(
                (gam(&direct, 0, 1, 1) + r).abs() < 1e-8 * r.max(1.0),
                format!("Γ̄^r_φφ = {} vs -r = {}", gam(&direct, 0, 1, 1), -r),
            )?;
            check(
                (gam(&direct, 1, 0, 1) - 1.0 / r).abs() < 1e-8,
                format!("Γ̄^φ_rφ = {} vs 1/r = {}", gam(&direct, 1, 0, 1), 1.0 / r),
            )?;
            let gamma = formal_christoffels::<f64>(&flat, &x, &y).map_err(|e| e.to_string())?;
            let transformed =
                transform_connection(&polar, &gamma, &x, &xb).map_err(|e| e.to_string())?;
            for k in 0..transformed.len() {
                check(
                    (transformed[k] - direct[k]).abs() < 1e-8 * direct[k].abs().max(1.0),
                    format!("polar cocycle mismatch at {k}"),
                )?;
            }
        }

        // shear chart over the Randers metric: Γ, N cocycles and tensorial Q
        let shear = ChartMap::new(
            2,
            vec![parse("x0 + 0.3*x1^2", 2).unwrap(), parse("x1", 2).unwrap()],
            vec![parse("x0 - 0.3*x1^2", 2).unwrap(), parse("x1", 2).unwrap()],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
            Params::new(),
        )
        .map_err(|e| e.to_string())?;
        let m = randers();
        let pulled = Arc::new(shear.pull_back_metric(&m).map_err(|e| e.to_string())?);
        let chern = ChernConnection::new(m.clone());
        let chern_bar = ChernConnection::new(pulled.clone());
        let q = ConnectionDifference {
            left: ChernConnection::new(m.clone()),
            right: BerwaldConnection::new(m.clone()),
        };
        let q_bar = ConnectionDifference {
            left: ChernConnection::new(pulled.clone()),
            right: BerwaldConnection::new(pulled.clone()),
        };
        for s in samples_for(&m, 9, 25) {
            let xb = shear.to_new(&s.x).map_err(|e| e.to_string())?;
            let yb = shear.tangent_to_new(&s.x, &s.y).map_err(|e| e.to_string())?;
            let direct = chern_bar.coefficients::<f64>(&xb, &yb).map_err(|e| e.to_string())?;
            let transformed = transform_connection(
                &shear,
                &chern.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?,
                &s.x,
                &xb,
            )
            .map_err(|e| e.to_string())?;
            let scale = max_abs(&direct).max(1.0);
            for k in 0..direct.len() {
                check(
                    (transformed[k] - direct[k]).abs() < 1e-7 * scale,
                    format!("shear Γ cocycle at {k}"),
                )?;
            }
            let nl_direct = metric_nonlinear::<f64>(&pulled, &xb, &yb).map_err(|e| e.to_string())?;
            let nl_transformed = transform_nonlinear(
                &shear,
                &metric_nonlinear::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?,
                &s.x,
                &s.y,
                &xb,
            )
            .map_err(|e| e.to_string())?;
            let nscale = max_abs(&nl_direct).max(1.0);
            for k in 0..nl_direct.len() {
                check(
                    (nl_transformed[k] - nl_direct[k]).abs() < 1e-7 * nscale,
                    format!("shear N cocycle at {k}"),
                )?;
            }
            let qd: TensorData<f64> = q_bar.components(&xb, &yb).map_err(|e| e.to_string())?;
            let qt = transform_tensor(
                &shear,
                &q.components(&s.x, &s.y).map_err(|e| e.to_string())?,
                &s.x,
                &xb,
            )
            .map_err(|e| e.to_string())?;
            let qscale = qd.max_abs().max(1.0);
            for (u, v) in qd.flat().iter().zip(qt.flat()) {
                check(
                    (u - v).abs() < 1e-9 * qscale,
                    format!("Q not tensorial: {u} vs {v}"),
                )?;
            }
        }
        Ok(())
    })());
}

#[test]
fn c10_homogeneity_and_euler_suite() {
    conclude(10, "homogeneity degrees and Euler identities hold; the negative control fails", (|| {
        let factors = [0.5, 2.0, 7.3];
        for m in [randers(), lorentz_example()] {
            let berwald = BerwaldConnection::new(m.clone());
            let chern = ChernConnection::new(m.clone());
            let mut control_failed = false;
            for s in samples_for(&m, 10, 100) {
                let evals: Vec<(&str, i32, Vec<f64>)> = vec![
                    ("L", 2, vec![m.lagrangian_value::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?]),
                    ("g", 0, m.fundamental_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?.matrix().to_vec()),
                    ("C", -1, m.cartan_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?.components().to_vec()),
                    ("gamma", 0, formal_christoffels::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?),
                    ("G", 2, geodesic_spray::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?),
                    ("N", 1, metric_nonlinear::<f64>(&m, &s.x, &s.y).map_err(|e| e.to_string())?),
                    ("berwald", 0, berwald.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?),
                    ("chern", 0, chern.coefficients::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?),
                ];
                for lambda in factors {
                    let ys: Vec<f64> = s.y.iter().map(|v| lambda * v).collect();
                    let scaled: Vec<(&str, i32, Vec<f64>)> = vec![
                        ("L", 2, vec![m.lagrangian_value::<f64>(&s.x, &ys).map_err(|e| e.to_string())?]),
                        ("g", 0, m.fundamental_tensor::<f64>(&s.x, &ys).map_err(|e| e.to_string())?.matrix().to_vec()),
                        ("C", -1, m.cartan_tensor::<f64>(&s.x, &ys).map_err(|e| e.to_string())?.components().to_vec()),
                        ("gamma", 0, formal_christoffels::<f64>(&m, &s.x, &ys).map_err(|e| e.to_string())?),
                        ("G", 2, geodesic_spray::<f64>(&m, &s.x, &ys).map_err(|e| e.to_string())?),
                        ("N", 1, metric_nonlinear::<f64>(&m, &s.x, &ys).map_err(|e| e.to_string())?),
                        ("berwald", 0, berwald.coefficients::<f64>(&s.x, &ys).map_err(|e| e.to_string())?),
                        ("chern", 0, chern.coefficients::<f64>(&s.x, &ys).map_err(|e| e.to_string())?),
                    ];
                    for ((name, degree, base), (_, _, at_scaled)) in evals.iter().zip(&scaled) {
                        let factor = lambda.powi(*degree);
                        for (b, v) in base.iter().zip(at_scaled) {
                            let expect = factor * b;
                            let scale = expect.abs().max(v.abs()).max(1.0);
                            check(
                                (v - expect).abs() < 1e-9 * scale,
                                format!("{name} not {degree}-homogeneous: {v} vs {expect}"),
                            )?;
                        }
                    }
                    // negative control: L + y0 is not 2-homogeneous
                    let broken_base =
                        m.lagrangian_value::<f64>(&s.x, &s.y).map_err(|e| e.to_string())? + s.y[0];
                    let broken_scaled =
                        m.lagrangian_value::<f64>(&s.x, &ys).map_err(|e| e.to_string())? + ys[0];
                    let expect = lambda * lambda * broken_base;
                    if (broken_scaled - expect).abs()
                        > 1e-9 * expect.abs().max(broken_scaled.abs()).max(1.0)
                    {
                        control_failed = true;
                    }
                }
                // Euler: C·y = 0 and g(v,v) = L
                let c = m.cartan_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
                let contracted = c.contract_direction(&s.y);
                check(
                    max_abs(&contracted) < 1e-9 * c.max_abs().max(1.0),
                    "C·y ≠ 0",
                )?;
                let g = m.fundamental_tensor::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
                let l = m.lagrangian_value::<f64>(&s.x, &s.y).map_err(|e| e.to_string())?;
                check(
                    (g.inner(&s.y, &s.y) - l).abs() < 1e-9 * l.abs().max(1.0),
                    "g(v,v) ≠ L(v)",
                )?;
            }
            check(control_failed, "the broken field passed homogeneity")?;
        }
        Ok(())
    })());
}

#[test]
fn c11_exact_vs_fd_derivative_engine() {
    conclude(11, "exact partials match the FD oracle to 1e-5 (order ≤ 4) and 1e-3 (order 5)", (|| {
        for (name, m) in [
            ("pseudo-riemannian", expdiag()),
            ("randers", randers()),
            ("lorentz-finsler", lorentz_example()),
        ] {
            let boxes = SampleBoxes {
                min_slack: 0.6,
                min_y_norm: 0.7,
                ..SampleBoxes::for_metric(&m)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let samples = sampler::draw_many(&m, &boxes, &mut rng, 50).map_err(|e| e.to_string())?;
            let steps = finsler::verify::tolerances::FD_STEP_BY_ORDER;
            for s in &samples {
                let l_scale = m
                    .lagrangian_value::<f64>(&s.x, &s.y)
                    .map_err(|e| e.to_string())?
                    .abs();
                for order in 1..=5usize {
                    let vars: Vec<Var> = (0..order)
                        .map(|_| {
                            let idx = rng.gen_range(0..m.dim());
                            if rng.gen_bool(0.3) {
                                Var::X(idx)
                            } else {
                                Var::Y(idx)
                            }
                        })
                        .collect();
                    let fd = match fd_partial(
                        m.lagrangian(),
                        &s.x,
                        &s.y,
                        &vars,
                        FdConfig::with_step(steps[order - 1]),
                    ) {
                        Ok(v) => v,
                        Err(finsler::Error::Eval(_)) => continue, // stencil left the domain
                        Err(e) => return Err(e.to_string()),
                    };
                    let exact: f64 = m
                        .lagrangian()
                        .eval_partial(&vars, &s.x, &s.y)
                        .map_err(|e| e.to_string())?;
                    let allowed = if order == 5 { 1e-3 } else { 1e-5 };
                    check(
                        (exact - fd).abs() <= allowed * exact.abs().max(l_scale).max(1.0),
                        format!(
                            "{name} order {order} {vars:?}: exact {exact} vs fd {fd} at (x={:?}, y={:?})",
                            s.x, s.y
                        ),
                    )?;
                }
            }
        }
        Ok(())
    })());
}
