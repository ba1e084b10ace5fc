//! Result tables shared by every command.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Acceptance rule for a checked row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Tolerance {
    /// `|value − expected| ≤ tol`
    Absolute(f64),
    /// `|value − expected| ≤ k·standard_error`
    Sigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub value: f64,
    pub standard_error: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: Option<Tolerance>,
    pub status: Option<Status>,
    pub note: String,
}

impl Row {
    pub fn value(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            standard_error: None,
            expected: None,
            tolerance: None,
            status: None,
            note: String::new(),
        }
    }

    pub fn with_error(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Compares against `expected` and records PASS or FAIL.
    pub fn check(mut self, expected: f64, tolerance: Tolerance) -> Self {
        let gap = (self.value - expected).abs();
        let ok = match tolerance {
            Tolerance::Absolute(tol) => gap <= tol,
            Tolerance::Sigma(k) => self.standard_error.is_some_and(|se| gap <= k * se),
        };
        self.expected = Some(expected);
        self.tolerance = Some(tolerance);
        self.status = Some(if ok { Status::Pass } else { Status::Fail });
        self
    }

    /// A row that failed to compute at all.
    pub fn failed(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            status: Some(Status::Fail),
            ..Self::value(name, f64::NAN).note(reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub wall_time_seconds: f64,
}

/// SHA-256 over the command name, its arguments and the loaded input bytes.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("{:x}", h.finalize())
}

/// Twelve significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn tol_text(t: Option<Tolerance>) -> String {
    match t {
        Some(Tolerance::Absolute(v)) => format!("abs {}", fmt_num(v)),
        Some(Tolerance::Sigma(k)) => format!("{k} sigma"),
        None => String::new(),
    }
}

fn status_text(s: Option<Status>) -> &'static str {
    match s {
        Some(Status::Pass) => "PASS",
        Some(Status::Fail) => "FAIL",
        None => "",
    }
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == Some(Status::Fail))
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed())
    }

    /// Aligned human-readable table.
    pub fn table(&self) -> String {
        let header = ["name", "value", "std_error", "expected", "tolerance", "status", "note"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.name.clone(),
                    fmt_num(r.value),
                    opt(r.standard_error),
                    opt(r.expected),
                    tol_text(r.tolerance),
                    status_text(r.status).to_string(),
                    r.note.clone(),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
                if i + 1 == cells.len() {
                    s.push_str(c);
                } else {
                    s.push_str(c);
                    s.push_str(&" ".repeat(w - c.chars().count() + 2));
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = format!(
            "# {}  seed={}  digest={}  time={:.3}s\n",
            self.command,
            self.seed,
            &self.inputs_digest[..16.min(self.inputs_digest.len())],
            self.wall_time_seconds
        );
        out += &line(&header.map(String::from));
        for row in &body {
            out += &line(row);
        }
        if self.rows.iter().any(|r| r.status.is_some()) {
            let fails = self.rows.iter().filter(|r| r.status == Some(Status::Fail)).count();
            let checked = self.rows.iter().filter(|r| r.status.is_some()).count();
            out += &format!("{} of {checked} checks passed\n", checked - fails);
        }
        out
    }

    pub fn write_csv(&self, w: impl Write) -> CliResult<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(["name", "value", "standard_error", "expected", "tolerance", "status", "note"])?;
        for r in &self.rows {
            wr.write_record([
                r.name.as_str(),
                &fmt_num(r.value),
                &opt(r.standard_error),
                &opt(r.expected),
                &tol_text(r.tolerance),
                status_text(r.status),
                &r.note,
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> CliResult<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
