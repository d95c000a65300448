//! Structured run reports and their on-disk encodings.
//!
//! A report is one JSON document. Floats are always written with 17
//! significant digits in exponent form so that the same run produces the
//! same bytes on every platform; curves and profiles go to sidecar CSVs.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::tol::Tolerances;
use crate::verdict::{Status, Verdict};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub inputs: Value,
    pub tolerances: Tolerances,
    pub results: Value,
    pub verdicts: Vec<Verdict>,
    /// Wall-clock milliseconds per stage; only filled when requested since
    /// it makes reports non-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
}

/// A table destined for a sidecar CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl AnalysisReport {
    pub fn new(command: impl Into<String>, tolerances: Tolerances) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: Value::Object(Default::default()),
            tolerances,
            results: Value::Object(Default::default()),
            verdicts: Vec::new(),
            timings: None,
            curves: Vec::new(),
        }
    }

    pub fn set_input(&mut self, key: &str, value: impl Serialize) {
        insert(&mut self.inputs, key, value);
    }

    pub fn set_result(&mut self, key: &str, value: impl Serialize) {
        insert(&mut self.results, key, value);
    }

    pub fn push(&mut self, verdict: Verdict) {
        self.verdicts.push(verdict);
    }

    pub fn record_timing(&mut self, stage: &str, millis: f64) {
        if let Some(t) = self.timings.as_mut() {
            t.insert(stage.to_string(), millis);
        }
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        write_json(&mut buf, self).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Writes the report and one sidecar CSV per curve next to it.
    pub fn write_to(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json().as_bytes())?;
        file.write_all(b"\n")?;
        let mut written = vec![path.to_path_buf()];
        for curve in &self.curves {
            let sidecar = sidecar_path(path, &curve.name);
            std::fs::write(&sidecar, curve.to_csv())?;
            written.push(sidecar);
        }
        Ok(written)
    }
}

fn insert(target: &mut Value, key: &str, value: impl Serialize) {
    let v = serde_json::to_value(value).unwrap_or(Value::Null);
    if let Value::Object(map) = target {
        map.insert(key.to_string(), v);
    }
}

/// `report.json` + `profile` → `report.profile.csv`.
pub fn sidecar_path(report: &Path, name: &str) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.{name}.csv"))
}

impl Curve {
    pub fn new(name: impl Into<String>, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Curve {
            name: name.into(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, exponent form.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as JSON with fixed 17-digit floats.
pub fn write_json<W: io::Write, T: Serialize + ?Sized>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FixedDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| LabError::Io(e.to_string()))
}

pub fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn serialize_complex_vec<S: Serializer>(
    zs: &[Complex64],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(zs.len()))?;
    for z in zs {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}
