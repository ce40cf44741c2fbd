//! Machine-readable reports.
//!
//! JSON with a fixed key order and every float written as `{:.16e}`
//! (17 significant digits). Wall-clock time is only included on request,
//! so reports for identical inputs are byte-identical.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA: &str = "acgeom-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckVerdict {
    Pass,
    /// passes, but the outcome deserves attention (e.g. inconclusive points)
    Flagged,
    Fail,
    /// informational record, no tolerance attached
    Info,
}

impl CheckVerdict {
    pub fn is_failure(self) -> bool {
        self == CheckVerdict::Fail
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: Option<f64>,
    pub verdict: CheckVerdict,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRecord {
    /// Passes when `max_residual < tol` (NaN fails).
    pub fn below(name: &str, points: usize, max_residual: f64, tol: f64) -> Self {
        CheckRecord {
            name: name.into(),
            points,
            max_residual,
            tolerance: Some(tol),
            verdict: if max_residual < tol { CheckVerdict::Pass } else { CheckVerdict::Fail },
            note: String::new(),
        }
    }

    /// Passes when every one of `points` cases satisfied the predicate.
    /// `max_residual` is the number of failing cases.
    pub fn count(name: &str, points: usize, failures: usize) -> Self {
        CheckRecord {
            name: name.into(),
            points,
            max_residual: failures as f64,
            tolerance: Some(0.5),
            verdict: if failures == 0 { CheckVerdict::Pass } else { CheckVerdict::Fail },
            note: String::new(),
        }
    }

    pub fn info(name: &str, points: usize, value: f64) -> Self {
        CheckRecord {
            name: name.into(),
            points,
            max_residual: value,
            tolerance: None,
            verdict: CheckVerdict::Info,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn flag_if(mut self, cond: bool) -> Self {
        if cond && self.verdict == CheckVerdict::Pass {
            self.verdict = CheckVerdict::Flagged;
        }
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub scene: Option<String>,
    pub seed: u64,
    pub points: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<CheckRecord>,
    pub overall: CheckVerdict,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl Report {
    pub fn new(command: &str, scene: Option<&str>, seed: u64, points: usize) -> Self {
        Report {
            schema: SCHEMA,
            tool_version: TOOL_VERSION,
            command: command.into(),
            scene: scene.map(str::to_string),
            seed,
            points,
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
            overall: CheckVerdict::Pass,
            details: serde_json::Value::Null,
            wall_clock_seconds: None,
        }
    }

    pub fn push(&mut self, c: CheckRecord) {
        if let Some(t) = c.tolerance {
            self.tolerances.entry(c.name.clone()).or_insert(t);
        }
        self.checks.push(c);
        self.overall = overall(&self.checks);
    }

    pub fn failed(&self) -> bool {
        self.overall.is_failure()
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tol = c.tolerance.map_or("-".to_string(), |t| format!("{t:.1e}"));
            out.push_str(&format!(
                "{:<8} {:<36} n={:<5} max={:<12.4e} tol={}{}\n",
                format!("{:?}", c.verdict).to_uppercase(),
                c.name,
                c.points,
                c.max_residual,
                tol,
                if c.note.is_empty() { String::new() } else { format!("  ({})", c.note) }
            ));
        }
        out.push_str(&format!("overall: {:?}\n", self.overall).to_uppercase());
        out
    }
}

pub fn overall(checks: &[CheckRecord]) -> CheckVerdict {
    if checks.iter().any(|c| c.verdict.is_failure()) {
        CheckVerdict::Fail
    } else if checks.iter().any(|c| c.verdict == CheckVerdict::Flagged) {
        CheckVerdict::Flagged
    } else {
        CheckVerdict::Pass
    }
}

/// Pretty JSON writer that prints floats in fixed scientific notation.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf8")
}
