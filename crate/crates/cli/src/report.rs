//! Run reports: an aligned text table on stdout and an optional CSV file.

use std::path::Path;
use std::time::Duration;

use sha2::{Digest, Sha256};

/// First line of every CSV file; bump when the columns change.
pub const CSV_SCHEMA: &str = "# qcorr-csv v1";
pub const CSV_COLUMNS: [&str; 4] = ["command", "input_sha256", "name", "value"];

#[derive(Debug, Default)]
pub struct Report {
    pub command: String,
    pub input_digest: Option<String>,
    pub results: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.results.push((name.into(), value.into()));
    }

    pub fn value(&mut self, name: impl Into<String>, x: f64) {
        self.push(name, num(x));
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn print(&self) {
        println!("command: {}", self.command);
        if let Some(d) = &self.input_digest {
            println!("input sha256: {d}");
        }
        let width = self.results.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        for (name, value) in &self.results {
            println!("  {name:<width$}  {value}");
        }
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        println!("elapsed: {:.3}s", self.elapsed.as_secs_f64());
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CSV_SCHEMA.as_bytes());
        buf.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(CSV_COLUMNS)?;
            let digest = self.input_digest.as_deref().unwrap_or("");
            for (name, value) in &self.results {
                w.write_record([self.command.as_str(), digest, name, value])?;
            }
            w.flush()?;
        }
        std::fs::write(path, buf)
    }
}
