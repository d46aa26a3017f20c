//! End-to-end tests of the `finsler` binary: subcommands, output formats
//! and the exit-code table.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
}

fn spec(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name);
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn tensor_minkowski_diag() {
    let out = run(&[
        "tensor",
        &spec("minkowski.json"),
        "--at", "0", "0", "0", "0",
        "--dir", "1", "0", "0", "0",
        "--what", "g",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"signature\": [1, 3, 0]"), "{text}");
    assert!(text.contains("-1.0000000000000000e0"));
    // valid JSON with 17-significant-digit numbers
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["components"][0][0], 1.0);
    assert_eq!(parsed["components"][1][1], -1.0);
}

#[test]
fn tensor_chern_zeros_on_flat() {
    let out = run(&[
        "tensor",
        &spec("euclid2.json"),
        "--at", "0.3", "-0.2",
        "--dir", "1", "0.5",
        "--what", "chern",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let v = parsed["components"][a][i][j].as_f64().unwrap();
                assert!(v.abs() < 1e-12);
            }
        }
    }
}

#[test]
fn tensor_torsion_randers_below_tolerance() {
    let out = run(&[
        "tensor",
        &spec("randers2.json"),
        "--at", "0", "0",
        "--dir", "1", "0",
        "--what", "torsion",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for a in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let v = parsed["components"][a][i][j].as_f64().unwrap();
                assert!(v.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn tensor_inadmissible_is_exit_2() {
    let out = run(&[
        "tensor",
        &spec("minkowski.json"),
        "--at", "0", "0", "0", "0",
        "--dir", "1", "2", "0", "0",
        "--what", "g",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn schema_error_is_exit_1() {
    let dir = std::env::temp_dir().join("finsler_cli_schema_test.json");
    std::fs::write(&dir, "{\"dimension\": 2, \"family\": \"nope\", \"L\": \"y0\", \"domain\": [\"y0\"]}")
        .unwrap();
    let out = run(&["verify", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn geodesic_flat_straight_line() {
    let out = run(&[
        "geodesic",
        &spec("euclid2.json"),
        "--from", "0", "0",
        "--dir", "1", "2",
        "--tmax", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x0,x1,y0,y1,L");
    let footer = text.lines().last().unwrap();
    assert!(footer.starts_with("# max_L_drift"), "{footer}");
    let final_row: Vec<f64> = text
        .lines()
        .rev()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((final_row[1] - 1.0).abs() < 1e-9);
    assert!((final_row[2] - 2.0).abs() < 1e-9);
    assert!((final_row[5] - 5.0).abs() < 1e-12, "L(xdot) column");
}

#[test]
fn geodesic_chern_and_spray_agree() {
    let args_common = [
        "geodesic",
        &spec("randers2.json"),
        "--from", "0.1", "-0.2",
        "--dir", "1", "0.3",
        "--tmax", "1",
        "--step", "0.001",
    ];
    let a = run(&[&args_common[..], &["--connection", "chern"]].concat());
    let b = run(&[&args_common[..], &["--connection", "spray"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let last = |out: &Output| -> Vec<f64> {
        stdout(out)
            .lines()
            .rev()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|c| c.parse().unwrap())
            .collect()
    };
    let (ra, rb) = (last(&a), last(&b));
    for i in 1..=2 {
        assert!(
            (ra[i] - rb[i]).abs() < 1e-8,
            "chern {} vs spray {}",
            ra[i],
            rb[i]
        );
    }
}

#[test]
fn geodesic_domain_exit_is_exit_4() {
    let file = std::env::temp_dir().join("finsler_cli_domain_exit.json");
    std::fs::write(
        &file,
        r#"{
  "dimension": 2,
  "family": "custom",
  "L": "y0^2 + y1^2",
  "domain": ["y0^2 + y1^2", "y0 - 5*x0*y1"]
}"#,
    )
    .unwrap();
    let out = run(&[
        "geodesic",
        file.to_str().unwrap(),
        "--from", "0", "0",
        "--dir", "1", "1",
        "--tmax", "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("t* = 0.19999"), "{err}");
}

#[test]
fn transport_pairings_stay_constant() {
    let out = run(&[
        "transport",
        &spec("randers2.json"),
        "--curve", "0.4*sin(t); 0.4*(1 - cos(t))",
        "--observer", "1", "0.1",
        "--vector", "1,0",
        "--vector", "0,1",
        "--t1", "0",
        "--t2", "1",
        "--step", "0.001",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "t,V0,V1,W0_0,W0_1,W1_0,W1_1,g_W0_W0,g_W0_W1,g_W1_W1,L_V"
    );
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let first = &rows[0];
    let last = rows.last().unwrap();
    for col in 7..=9 {
        assert!(
            (first[col] - last[col]).abs() < 1e-6,
            "pairing column {col} drifted: {} vs {}",
            first[col],
            last[col]
        );
    }
    assert!((first[10] - last[10]).abs() < 1e-6, "L(V) drifted");
}

#[test]
fn transport_accepts_csv_polylines() {
    let file = std::env::temp_dir().join("finsler_cli_curve.csv");
    let mut text = String::from("t,x0,x1\n");
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        text += &format!("{t},{},{}\n", 0.3 * t, 0.1 * t * t);
    }
    std::fs::write(&file, text).unwrap();
    let out = run(&[
        "transport",
        &spec("euclid2.json"),
        "--curve-csv", file.to_str().unwrap(),
        "--observer", "1", "0",
        "--vector", "0.5,0.25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last: Vec<f64> = text
        .lines()
        .rev()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    // flat metric: transported components stay put
    assert!((last[3] - 0.5).abs() < 1e-9);
    assert!((last[4] - 0.25).abs() < 1e-9);
}

#[test]
fn verify_quick_minkowski_exit_0() {
    let out = run(&["verify", &spec("minkowski.json"), "--suite", "quick", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all checks ok"));
}

#[test]
fn verify_failure_is_exit_5() {
    let file = std::env::temp_dir().join("finsler_cli_broken.json");
    std::fs::write(
        &file,
        r#"{
  "dimension": 2,
  "family": "custom",
  "L": "y0^2 + y1^2 + 0.1*y0",
  "domain": ["y0^2 + y1^2"]
}"#,
    )
    .unwrap();
    let out = run(&["verify", file.to_str().unwrap(), "--suite", "quick", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn verify_json_reports_are_byte_identical() {
    let args = [
        "verify",
        &spec("lorentz_finsler2.json"),
        "--suite", "quick",
        "--seed", "9",
        "--json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let parsed: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(parsed["seed"], 9);
    assert_eq!(parsed["ok"], true);
}

#[test]
fn verify_seed_from_environment() {
    let out = bin()
        .args(["verify", &spec("minkowski.json"), "--suite", "quick", "--json"])
        .env("FINSLER_SEED", "1234")
        .output()
        .unwrap();
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed["seed"], 1234);
}

#[test]
fn restspace_output() {
    let out = run(&[
        "tensor",
        &spec("minkowski.json"),
        "--at", "0", "0", "0", "0",
        "--dir", "1", "0", "0", "0",
        "--what", "restspace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(parsed["class"], "unit-observer");
    assert_eq!(parsed["definiteness"], "negative-definite");
    assert_eq!(parsed["basis"].as_array().unwrap().len(), 3);
}
