//! Subcommand implementations.

use std::io::Write;
use std::sync::Arc;

use finsler::connections::{
    cartan_corrected_nonlinear, formal_christoffels, geodesic_spray, metric_nonlinear, torsion,
    BerwaldConnection, ChernConnection, Connection,
};
use finsler::expr::{parse_curve_component, Params};
use finsler::geometry::{CausalClass, Definiteness, MetricSpec};
use finsler::transport::{
    integrate_geodesic, integrate_geodesic_spray, reference_transport, Curve, GeodesicResult,
    IntegratorConfig,
};
use finsler::verify::{run_suite, VerifyConfig};

use crate::output::{json_array, json_components, json_f64, json_string, CsvWriter};
use crate::specfile::{self, LoadedSpec};
use crate::{CliError, GeodesicArgs, TensorArgs, TransportArgs, VerifyArgs};

enum Conn {
    Chern(ChernConnection),
    Berwald(BerwaldConnection),
}

impl Conn {
    fn from_tag(tag: &str, metric: &Arc<MetricSpec>) -> Result<Self, CliError> {
        match tag {
            "chern" => Ok(Conn::Chern(ChernConnection::new(metric.clone()))),
            "berwald" => Ok(Conn::Berwald(BerwaldConnection::new(metric.clone()))),
            other => Err(CliError::schema(format!(
                "unknown connection '{other}' (expected chern or berwald)"
            ))),
        }
    }

}

fn check_point(spec: &LoadedSpec, x: &[f64], y: &[f64]) -> Result<(), CliError> {
    let n = spec.metric.dim();
    if x.len() != n || y.len() != n {
        return Err(CliError::schema(format!(
            "expected {n} coordinates for --at/--dir, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if !spec.metric.admissible(x, y).map_err(CliError::from)? {
        return Err(CliError::from(finsler::Error::NotAdmissible {
            x: x.to_vec(),
            y: y.to_vec(),
        }));
    }
    Ok(())
}

pub fn tensor(args: TensorArgs) -> Result<u8, CliError> {
    let spec = specfile::load(&args.spec)?;
    let m = &spec.metric;
    let n = m.dim();
    let (x, y) = (&args.at, &args.dir);
    check_point(&spec, x, y)?;
    let mut extra = String::new();
    let (formula, components, rank): (&str, Vec<f64>, usize) = match args.what.as_str() {
        "g" => {
            let g = m.fundamental_tensor::<f64>(x, y).map_err(CliError::from)?;
            let (p, ng, z) = m.signature(x, y).map_err(CliError::from)?;
            extra = format!(
                ",\n  \"determinant\": {},\n  \"condition_estimate\": {},\n  \"signature\": [{p}, {ng}, {z}]",
                json_f64(g.det()),
                json_f64(g.condition_estimate())
            );
            ("g_ij = 1/2 ∂²L/∂y^i∂y^j", g.matrix().to_vec(), 2)
        }
        "g-inverse" => {
            let g = m.fundamental_tensor::<f64>(x, y).map_err(CliError::from)?;
            ("g^ij = (g_ij)⁻¹", g.inverse_matrix().to_vec(), 2)
        }
        "cartan" => {
            let c = m.cartan_tensor::<f64>(x, y).map_err(CliError::from)?;
            ("C_ijk = 1/4 ∂³L/∂y^i∂y^j∂y^k", c.components().to_vec(), 3)
        }
        "gamma" => (
            "γ^a_ij = 1/2 g^{ak}(∂_{x^j} g_ki + ∂_{x^i} g_kj − ∂_{x^k} g_ij)",
            formal_christoffels::<f64>(m, x, y).map_err(CliError::from)?,
            3,
        ),
        "spray" => (
            "G^a = 1/2 γ^a_ij y^i y^j",
            geodesic_spray::<f64>(m, x, y).map_err(CliError::from)?,
            1,
        ),
        "N" => {
            let nl = metric_nonlinear::<f64>(m, x, y).map_err(CliError::from)?;
            let cross = cartan_corrected_nonlinear::<f64>(m, x, y).map_err(CliError::from)?;
            let dev = nl
                .iter()
                .zip(&cross)
                .fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
            extra = format!(",\n  \"cartan_corrected_deviation\": {}", json_f64(dev));
            ("N^a_i = ∂G^a/∂y^i", nl, 2)
        }
        "berwald" => (
            "Γ^a_ij = ∂²G^a/∂y^i∂y^j",
            BerwaldConnection::new(m.clone())
                .coefficients::<f64>(x, y)
                .map_err(CliError::from)?,
            3,
        ),
        "chern" => (
            "Γ^a_ij = 1/2 g^{ak}(δ_j g_ki + δ_i g_kj − δ_k g_ij), δ_k = ∂_{x^k} − N^l_k ∂_{y^l}",
            ChernConnection::new(m.clone())
                .coefficients::<f64>(x, y)
                .map_err(CliError::from)?,
            3,
        ),
        "torsion" => {
            let conn = Conn::from_tag(&args.connection, m)?;
            let tor = match &conn {
                Conn::Chern(c) => torsion(c, x, y),
                Conn::Berwald(c) => torsion(c, x, y),
            }
            .map_err(CliError::from)?;
            ("Tor^a_ij = Γ^a_ij − Γ^a_ji", tor.flat().to_vec(), 3)
        }
        "restspace" => {
            let basis = m.restspace_basis(x, y).map_err(CliError::from)?;
            let rest = m.restspace_metric(x, y, &basis).map_err(CliError::from)?;
            let class = m.classify(x, y).map_err(CliError::from)?;
            let class_tag = match class.class {
                CausalClass::UnitObserver => "unit-observer",
                CausalClass::Lightlike => "lightlike",
                CausalClass::Other => "other",
            };
            let def = match rest.definiteness {
                Definiteness::PositiveDefinite => "positive-definite",
                Definiteness::NegativeDefinite => "negative-definite",
                Definiteness::Indefinite => "indefinite",
                Definiteness::Degenerate => "degenerate",
            };
            let basis_json: Vec<String> = basis.iter().map(|b| json_array(b)).collect();
            let mut out = String::from("{\n");
            out += &format!("  \"spec\": {},\n", json_string(&spec.name));
            out += "  \"what\": \"restspace\",\n";
            out += &format!("  \"at\": {},\n", json_array(x));
            out += &format!("  \"dir\": {},\n", json_array(y));
            out += &format!(
                "  \"formula\": {},\n",
                json_string("T_vΣ = {w : g_v(v, w) = 0}")
            );
            out += &format!("  \"lagrangian\": {},\n", json_f64(class.value));
            out += &format!("  \"class\": {},\n", json_string(class_tag));
            out += &format!("  \"boundary\": {},\n", class.boundary);
            out += &format!("  \"basis\": [{}],\n", basis_json.join(", "));
            out += &format!(
                "  \"restspace_metric\": {},\n",
                json_components(&rest.matrix, rest.size.max(1), 2)
            );
            out += &format!("  \"eigenvalues\": {},\n", json_array(&rest.eigenvalues));
            out += &format!("  \"definiteness\": {}\n", json_string(def));
            out += "}\n";
            print!("{out}");
            return Ok(0);
        }
        other => {
            return Err(CliError::schema(format!(
                "unknown --what '{other}' (expected g, g-inverse, cartan, gamma, spray, N, berwald, chern, torsion, restspace)"
            )))
        }
    };
    let mut out = String::from("{\n");
    out += &format!("  \"spec\": {},\n", json_string(&spec.name));
    out += &format!("  \"what\": {},\n", json_string(&args.what));
    out += &format!("  \"at\": {},\n", json_array(x));
    out += &format!("  \"dir\": {},\n", json_array(y));
    out += &format!("  \"formula\": {},\n", json_string(formula));
    out += &format!(
        "  \"components\": {}{extra}\n",
        json_components(&components, n, rank)
    );
    out += "}\n";
    print!("{out}");
    Ok(0)
}

fn write_geodesic_csv<W: Write>(
    out: W,
    n: usize,
    run: &GeodesicResult,
) -> Result<(), CliError> {
    let mut csv = CsvWriter::new(out);
    let mut columns = vec!["t".to_string()];
    columns.extend((0..n).map(|i| format!("x{i}")));
    columns.extend((0..n).map(|i| format!("y{i}")));
    columns.push("L".into());
    csv.header(&columns)?;
    for (k, t) in run.ts.iter().enumerate() {
        let mut row = vec![*t];
        row.extend_from_slice(&run.positions[k]);
        row.extend_from_slice(&run.velocities[k]);
        row.push(run.lagrangian.get(k).copied().unwrap_or(f64::NAN));
        csv.row(&row)?;
    }
    csv.footer(&format!(
        "max_L_drift = {}",
        crate::output::format_sig(run.l_drift)
    ))?;
    Ok(())
}

pub fn geodesic(args: GeodesicArgs) -> Result<u8, CliError> {
    let spec = specfile::load(&args.spec)?;
    let m = &spec.metric;
    let n = m.dim();
    check_point(&spec, &args.from, &args.dir)?;
    if args.tmax <= 0.0 {
        return Err(CliError::schema("--tmax must be positive"));
    }
    let cfg = IntegratorConfig {
        step: args.step,
        ..Default::default()
    };
    let run = match args.connection.as_str() {
        "spray" => integrate_geodesic_spray(m, &args.from, &args.dir, (0.0, args.tmax), &cfg),
        tag => {
            let conn = Conn::from_tag(tag, m)?;
            match conn {
                Conn::Chern(c) => integrate_geodesic(&c, &args.from, &args.dir, (0.0, args.tmax), &cfg),
                Conn::Berwald(c) => {
                    integrate_geodesic(&c, &args.from, &args.dir, (0.0, args.tmax), &cfg)
                }
            }
        }
    }
    .map_err(CliError::from)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            write_geodesic_csv(file, n, &run)?;
        }
        None => write_geodesic_csv(std::io::stdout().lock(), n, &run)?,
    }
    if let Some(t) = run.exit {
        eprintln!("domain exit at t* = {t}");
        return Ok(4);
    }
    Ok(0)
}

fn load_curve(args: &TransportArgs, n: usize) -> Result<(Curve, f64, f64), CliError> {
    if let Some(exprs) = &args.curve {
        let components: Vec<_> = exprs
            .split(';')
            .map(|c| {
                parse_curve_component(c.trim())
                    .map_err(|e| CliError::schema(format!("curve component '{c}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if components.len() != n {
            return Err(CliError::schema(format!(
                "curve needs {n} components, got {}",
                components.len()
            )));
        }
        let t1 = args.t1.unwrap_or(0.0);
        let t2 = args.t2.unwrap_or(1.0);
        if t1 == t2 {
            return Err(CliError::schema("--t1 and --t2 must differ"));
        }
        let (a, b) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let curve = Curve::parametric(components, (a, b), Params::new()).map_err(CliError::from)?;
        Ok((curve, t1, t2))
    } else if let Some(path) = &args.curve_csv {
        let text = std::fs::read_to_string(path)?;
        let mut ts = Vec::new();
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic()) {
                continue; // header row
            }
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::schema(format!("curve CSV line {}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if cells.len() != n + 1 {
                return Err(CliError::schema(format!(
                    "curve CSV line {}: expected t plus {n} coordinates",
                    lineno + 1
                )));
            }
            ts.push(cells[0]);
            points.push(cells[1..].to_vec());
        }
        let curve = Curve::from_samples(&ts, &points).map_err(CliError::from)?;
        let (a, b) = curve.interval();
        Ok((curve, args.t1.unwrap_or(a), args.t2.unwrap_or(b)))
    } else {
        Err(CliError::schema("one of --curve or --curve-csv is required"))
    }
}

pub fn transport(args: TransportArgs) -> Result<u8, CliError> {
    let spec = specfile::load(&args.spec)?;
    let m = &spec.metric;
    let n = m.dim();
    if args.observer.len() != n {
        return Err(CliError::schema(format!(
            "--observer needs {n} components"
        )));
    }
    let (curve, t1, t2) = load_curve(&args, n)?;
    let x1 = curve.position(t1).map_err(CliError::from)?;
    check_point(&spec, &x1, &args.observer)?;
    let vectors: Vec<Vec<f64>> = args
        .vector
        .iter()
        .map(|s| {
            let v: Result<Vec<f64>, _> = s
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::schema(format!("--vector '{s}': {e}")))
                })
                .collect();
            let v = v?;
            if v.len() != n {
                return Err(CliError::schema(format!(
                    "--vector '{s}' needs {n} comma-separated components"
                )));
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let cfg = IntegratorConfig {
        step: args.step,
        ..Default::default()
    };
    let conn = Conn::from_tag(&args.connection, m)?;
    let result = match &conn {
        Conn::Chern(c) => reference_transport(c, &curve, &args.observer, &vectors, t1, t2, &cfg),
        Conn::Berwald(c) => reference_transport(c, &curve, &args.observer, &vectors, t1, t2, &cfg),
    }
    .map_err(CliError::from)?;

    let mut columns = vec!["t".to_string()];
    columns.extend((0..n).map(|i| format!("V{i}")));
    for w in 0..vectors.len() {
        columns.extend((0..n).map(move |i| format!("W{w}_{i}")));
    }
    for i in 0..vectors.len() {
        for j in i..vectors.len() {
            columns.push(format!("g_W{i}_W{j}"));
        }
    }
    columns.push("L_V".into());

    let render = |out: &mut dyn Write| -> Result<(), CliError> {
        let mut csv = CsvWriter::new(out);
        csv.header(&columns)?;
        for (k, t) in result.ts.iter().enumerate() {
            let mut row = vec![*t];
            row.extend_from_slice(&result.observer[k]);
            for w in 0..vectors.len() {
                row.extend_from_slice(&result.vectors[w][k]);
            }
            if !vectors.is_empty() {
                let x = curve.position(*t).map_err(CliError::from)?;
                let g = m
                    .fundamental_tensor::<f64>(&x, &result.observer[k])
                    .map_err(CliError::from)?;
                for i in 0..vectors.len() {
                    for j in i..vectors.len() {
                        row.push(g.inner(&result.vectors[i][k], &result.vectors[j][k]));
                    }
                }
            }
            row.push(result.observer_lagrangian.get(k).copied().unwrap_or(f64::NAN));
            csv.row(&row)?;
        }
        csv.footer(&format!(
            "max_L_drift = {} max_pairing_drift = {}",
            crate::output::format_sig(result.l_drift),
            crate::output::format_sig(result.pairing_drift)
        ))?;
        Ok(())
    };
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            render(&mut file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock)?;
        }
    }
    if let Some(t) = result.exit {
        eprintln!("domain exit at t* = {t}");
        return Ok(4);
    }
    Ok(0)
}

pub fn verify(args: VerifyArgs) -> Result<u8, CliError> {
    let spec = specfile::load(&args.spec)?;
    let quick = match args.suite.as_str() {
        "quick" => true,
        "full" => false,
        other => {
            return Err(CliError::schema(format!(
                "unknown suite '{other}' (expected quick or full)"
            )))
        }
    };
    let seed = args.seed.unwrap_or_else(|| {
        std::env::var("FINSLER_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    });
    let cfg = VerifyConfig::new(seed, quick, spec.name.clone());
    let report = run_suite(&spec.metric, &spec.charts, &cfg).map_err(CliError::from)?;
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(if report.ok() { 0 } else { 5 })
}
