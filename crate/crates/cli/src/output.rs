//! Output helpers: every number is printed with 17 significant digits so
//! doubles round-trip exactly; stdout carries data only.

use std::io::Write;

pub use finsler::verify::report::{format_sig, json_array, json_f64, json_string};

/// Render a flat tensor as nested JSON arrays by rank.
pub fn json_components(values: &[f64], n: usize, rank: usize) -> String {
    fn go(values: &[f64], n: usize, rank: usize) -> String {
        if rank == 0 {
            return json_f64(values[0]);
        }
        let stride = values.len() / n;
        let parts: Vec<String> = (0..n)
            .map(|i| go(&values[i * stride..(i + 1) * stride], n, rank - 1))
            .collect();
        format!("[{}]", parts.join(", "))
    }
    if rank == 0 {
        json_f64(values[0])
    } else {
        go(values, n, rank)
    }
}

pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W) -> Self {
        CsvWriter { out }
    }

    pub fn header(&mut self, columns: &[String]) -> std::io::Result<()> {
        writeln!(self.out, "{}", columns.join(","))
    }

    pub fn row(&mut self, values: &[f64]) -> std::io::Result<()> {
        let cells: Vec<String> = values.iter().map(|v| format_sig(*v)).collect();
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn footer(&mut self, text: &str) -> std::io::Result<()> {
        writeln!(self.out, "# {text}")
    }
}
