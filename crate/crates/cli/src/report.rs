//! Versioned JSON report and CSV tables.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "pflab-report/1";

/// How a number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Closed,
    Quad,
    Mc,
    Discrete,
    Fit,
}

/// A numeric result with its error estimate and route tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Num {
    pub value: f64,
    pub error: f64,
    pub route: Route,
}

impl Num {
    pub fn new(value: f64, error: f64, route: Route) -> Self {
        Num { value, error, route }
    }

    pub fn closed(value: f64) -> Self {
        Num::new(value, 0.0, Route::Closed)
    }

    pub fn quad(q: &pflab_core::integrate::QuadratureResult) -> Self {
        Num::new(q.value, q.error_estimate, Route::Quad)
    }

    pub fn mc(m: &pflab_core::integrate::MCEstimate) -> Self {
        Num::new(m.mean, m.std_error, Route::Mc)
    }

    pub fn discrete(value: f64) -> Self {
        Num::new(value, 0.0, Route::Discrete)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CheckFailed,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::CheckFailed => 1,
            Status::NonConvergence => 2,
        }
    }

    /// The more severe of two outcomes.
    pub fn worst(self, other: Status) -> Status {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A known discrepancy that is reported but does not fail a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flag {
    pub name: String,
    pub message: String,
    pub values: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    pub flags: Vec<Flag>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub seeds: Value,
    /// Wall-clock start and end; null unless requested so reports stay reproducible.
    pub timestamps: Option<Timestamps>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timestamps {
    pub started_unix: f64,
    pub finished_unix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub metadata: Metadata,
    pub results: Value,
    pub diagnostics: Diagnostics,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &str, config: Value, seeds: Value) -> Self {
        Report {
            schema: SCHEMA,
            metadata: Metadata {
                version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config,
                seeds,
                timestamps: None,
            },
            results: Value::Object(Default::default()),
            diagnostics: Diagnostics::default(),
            status: Status::Ok,
            error: None,
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.diagnostics.warnings.push(msg.into());
    }

    pub fn flag(&mut self, name: &str, message: impl Into<String>, values: Value) {
        self.diagnostics.flags.push(Flag {
            name: name.to_string(),
            message: message.into(),
            values,
        });
    }

    /// Records a check; a failure marks the report as failed.
    pub fn check(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, note: Option<String>) {
        if !passed {
            self.status = self.status.worst(Status::CheckFailed);
        }
        self.diagnostics.checks.push(Check {
            name: name.to_string(),
            passed,
            value,
            tolerance,
            note,
        });
    }

    pub fn fail(&mut self, status: Status, err: impl std::fmt::Display) {
        self.status = self.status.worst(status);
        self.error = Some(err.to_string());
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("report values serialize");
        if let Value::Object(m) = &mut self.results {
            m.insert(key.to_string(), v);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Plain comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form of a float; NaN and infinities spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_output(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_check_sets_status() {
        let mut r = Report::new("verify", Value::Null, Value::Null);
        r.check("a", true, 0.0, 1.0, None);
        assert_eq!(r.status, Status::Ok);
        r.check("b", false, 2.0, 1.0, None);
        assert_eq!(r.status.exit_code(), 1);
        r.fail(Status::NonConvergence, "x");
        assert_eq!(r.status.exit_code(), 2);
        r.check("c", false, 2.0, 1.0, None);
        assert_eq!(r.status, Status::NonConvergence);
    }

    #[test]
    fn nan_serializes_as_null() {
        let v = serde_json::to_value(Num::discrete(f64::NAN)).unwrap();
        assert!(v["value"].is_null());
        assert_eq!(v["route"], "discrete");
    }

    #[test]
    fn floats_round_trip_in_tables() {
        for x in [0.1, -2.5e-17, 1.0 / 3.0, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn table_uses_lf_and_header() {
        let dir = std::env::temp_dir().join(format!("pflab-table-{}", std::process::id()));
        let mut t = Table::new(&["x", "y"]);
        t.push(vec!["1".into(), "2".into()]);
        t.write(&dir).unwrap();
        let s = std::fs::read_to_string(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(s, "x,y\n1,2\n");
    }
}
