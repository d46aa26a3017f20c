//! Structured check reports with deterministic JSON and text rendering.
//!
//! Numeric output is printed with 17 significant digits so every double
//! round-trips exactly; reports carry the seed and no timing data, making
//! byte-identical output a function of the inputs alone.

use std::fmt::Write as _;

/// Outcome of one verification check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    /// The identity being exercised, written as a formula.
    pub identity: String,
    /// Number of conclusive samples.
    pub samples: usize,
    /// Samples excluded as inconclusive (domain exits and such).
    pub skipped: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    /// `max_residual ≤ tolerance` over the conclusive samples.
    pub passed: bool,
    /// Negative controls assert a theorem's converse: they are expected
    /// to exceed the tolerance, and the suite fails when they do not.
    pub expected_fail: bool,
    /// Worst-case sample `(x, y)`.
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
    pub note: Option<String>,
}

impl CheckReport {
    /// Whether the check contributes a success to the suite. Checks with
    /// no conclusive samples or a failure note never do — in particular,
    /// an inconclusive negative control is not an observed failure.
    pub fn ok(&self) -> bool {
        self.samples > 0 && self.note.is_none() && (self.passed != self.expected_fail)
    }
}

/// Aggregated suite outcome.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub metric: String,
    pub seed: u64,
    pub quick: bool,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(CheckReport::ok)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "verification suite: metric={} seed={} mode={}",
            self.metric,
            self.seed,
            if self.quick { "quick" } else { "full" }
        );
        for c in &self.checks {
            let status = if c.ok() { " ok " } else { "FAIL" };
            let marker = if c.expected_fail {
                " [negative control]"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "[{status}] {:<34} residual={: <13} tol={: <9} n={}{}{}{}",
                c.name,
                format_sig(c.max_residual),
                format!("{:.1e}", c.tolerance),
                c.samples,
                if c.skipped > 0 {
                    format!(" skipped={}", c.skipped)
                } else {
                    String::new()
                },
                marker,
                c.note
                    .as_deref()
                    .map(|n| format!("  ({n})"))
                    .unwrap_or_default()
            );
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.ok() { "all checks ok" } else { "FAILURES" }
        );
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let _ = write!(out, "  \"metric\": {},\n", json_string(&self.metric));
        let _ = write!(out, "  \"seed\": {},\n", self.seed);
        let _ = write!(
            out,
            "  \"suite\": \"{}\",\n",
            if self.quick { "quick" } else { "full" }
        );
        let _ = write!(out, "  \"ok\": {},\n", self.ok());
        out.push_str("  \"checks\": [\n");
        for (i, c) in self.checks.iter().enumerate() {
            out.push_str("    {");
            let _ = write!(out, "\"name\": {}, ", json_string(&c.name));
            let _ = write!(out, "\"identity\": {}, ", json_string(&c.identity));
            let _ = write!(out, "\"samples\": {}, ", c.samples);
            let _ = write!(out, "\"skipped\": {}, ", c.skipped);
            let _ = write!(out, "\"max_residual\": {}, ", json_f64(c.max_residual));
            let _ = write!(out, "\"tolerance\": {}, ", json_f64(c.tolerance));
            let _ = write!(out, "\"passed\": {}, ", c.passed);
            let _ = write!(out, "\"expected_fail\": {}, ", c.expected_fail);
            let _ = write!(out, "\"ok\": {}", c.ok());
            if let Some((x, y)) = &c.worst {
                let _ = write!(out, ", \"worst_x\": {}", json_array(x));
                let _ = write!(out, ", \"worst_y\": {}", json_array(y));
            }
            if let Some(n) = &c.note {
                let _ = write!(out, ", \"note\": {}", json_string(n));
            }
            out.push('}');
            if i + 1 < self.checks.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]\n}\n");
        out
    }
}

/// 17 significant digits: round-trip exact for IEEE-754 doubles.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        "0.0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn json_f64(v: f64) -> String {
    if v.is_finite() {
        format_sig(v)
    } else {
        // JSON has no infinities; encode as strings
        format!("\"{v}\"")
    }
}

pub fn json_array(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| json_f64(*v)).collect();
    format!("[{}]", inner.join(", "))
}

pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_round_trip() {
        let v = 0.1 + 0.2;
        let s = format_sig(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(v.to_bits(), back.to_bits());
    }

    #[test]
    fn report_json_is_deterministic() {
        let report = SuiteReport {
            metric: "unit".into(),
            seed: 7,
            quick: false,
            checks: vec![CheckReport {
                name: "demo".into(),
                identity: "g(v,v) = L(v)".into(),
                samples: 3,
                skipped: 0,
                max_residual: 1.25e-12,
                tolerance: 1e-9,
                passed: true,
                expected_fail: false,
                worst: Some((vec![0.0, 1.0], vec![1.0, 0.5])),
                note: None,
            }],
        };
        assert_eq!(report.to_json(), report.to_json());
        assert!(report.to_json().contains("\"ok\": true"));
        assert!(report.ok());
    }

    #[test]
    fn expected_fail_semantics() {
        let mut c = CheckReport {
            name: "control".into(),
            identity: "broken on purpose".into(),
            samples: 1,
            skipped: 0,
            max_residual: 1.0,
            tolerance: 1e-9,
            passed: false,
            expected_fail: true,
            worst: None,
            note: None,
        };
        assert!(c.ok(), "an observed failure satisfies a negative control");
        c.passed = true;
        assert!(!c.ok(), "a passing negative control is a suite failure");
    }
}
