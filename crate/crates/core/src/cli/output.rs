//! CSV tables with a one-line JSON manifest header.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::time::Duration;

use serde::Serialize;
use serde_json::json;

use crate::error::Result;

#[derive(Clone, Debug, Default)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header line and rows, without the manifest.
    pub fn body(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

fn escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Shortest round-trip form; the same value always prints the same way.
/// Very small or large magnitudes switch to exponent notation.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-6..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn cell(x: impl Display) -> String {
    x.to_string()
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest<P: Serialize> {
    pub command: &'static str,
    pub params: P,
    pub seed: u64,
}

impl<P: Serialize> RunManifest<P> {
    pub fn header_line(&self, duration: Duration) -> String {
        let value = json!({
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "duration_ms": duration.as_millis() as u64,
        });
        format!("# {value}\n")
    }
}

/// Writes the manifest line and the table to `out` (`-` is standard output).
pub fn write_report<P: Serialize>(
    out: &str,
    manifest: &RunManifest<P>,
    table: &Table,
    duration: Duration,
) -> Result<()> {
    let text = format!("{}{}", manifest.header_line(duration), table.body());
    if out == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        lock.write_all(text.as_bytes())?;
        lock.flush()?;
    } else {
        let mut w = BufWriter::new(File::create(out)?);
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

/// Drops the `#` manifest line(s) of a report.
pub fn strip_manifest(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_body_and_manifest() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.1), cell("x,y")]);
        t.push(vec![num(1e-300), opt_num(None)]);
        assert_eq!(t.body(), "a,b\n0.1,\"x,y\"\n1e-300,\n");
        let m = RunManifest { command: "tail", params: json!({"lambda": [1.0]}), seed: 7 };
        let line = m.header_line(Duration::from_millis(12));
        assert!(line.starts_with("# {"));
        let v: serde_json::Value = serde_json::from_str(line[2..].trim()).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["command"], "tail");
        assert_eq!(v["duration_ms"], 12);
        assert_eq!(strip_manifest(&format!("{line}{}", t.body())), t.body());
    }
}
