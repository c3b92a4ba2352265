//! Structured reports with deterministic JSON and text rendering.
//!
//! Machine-facing numbers carry 17 significant digits; the text form shows
//! 6. Non-finite numbers render as the strings `inf`, `-inf` and `nan`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{Map, Number, Value as Json};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Num)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Num(x) if x.is_finite() => {
                Json::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is a JSON number"))
            }
            Value::Num(x) => Json::String(non_finite(*x).to_string()),
            Value::Int(i) => Json::Number((*i).into()),
            Value::Text(s) => Json::String(s.clone()),
            Value::Bool(b) => Json::Bool(*b),
            Value::Missing => Json::Null,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Value::Num(x) => human(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Missing => "-".to_string(),
        }
    }
}

fn non_finite(x: f64) -> &'static str {
    if x.is_nan() {
        "nan"
    } else if x > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

/// Six significant digits.
pub fn human(x: f64) -> String {
    if !x.is_finite() {
        return non_finite(x).to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs();
    if (1e-3..1e6).contains(&mag) {
        let decimals = (5 - mag.log10().floor() as i32).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub values: Vec<(String, Value)>,
    pub table: Option<Table>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            values: Vec::new(),
            table: None,
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.values.push((key.into(), value.into()));
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.values.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tool_version: String,
    /// SHA-256 over every input, hex.
    pub inputs_digest: String,
    pub sections: Vec<Section>,
    pub warnings: Vec<String>,
}

/// Digest of named inputs in order; names and lengths are included so
/// that boundaries between inputs cannot shift.
pub fn digest_inputs<'a>(inputs: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in inputs {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

impl Report {
    pub fn new(inputs_digest: String) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs_digest,
            sections: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_json_value(&self) -> Json {
        let mut root = Map::new();
        root.insert("tool_version".into(), Json::String(self.tool_version.clone()));
        root.insert("inputs_digest".into(), Json::String(self.inputs_digest.clone()));
        let sections = self
            .sections
            .iter()
            .map(|s| {
                let mut m = Map::new();
                m.insert("name".into(), Json::String(s.name.clone()));
                let values: Map<String, Json> = s.values.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                m.insert("values".into(), Json::Object(values));
                if let Some(t) = &s.table {
                    let mut tm = Map::new();
                    tm.insert(
                        "columns".into(),
                        Json::Array(t.columns.iter().map(|c| Json::String(c.clone())).collect()),
                    );
                    tm.insert(
                        "rows".into(),
                        Json::Array(
                            t.rows
                                .iter()
                                .map(|r| Json::Array(r.iter().map(Value::to_json).collect()))
                                .collect(),
                        ),
                    );
                    m.insert("table".into(), Json::Object(tm));
                }
                Json::Object(m)
            })
            .collect();
        root.insert("sections".into(), Json::Array(sections));
        root.insert(
            "warnings".into(),
            Json::Array(self.warnings.iter().map(|w| Json::String(w.clone())).collect()),
        );
        Json::Object(root)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "coaxline {}", self.tool_version);
        let _ = writeln!(out, "inputs sha256: {}", self.inputs_digest);
        for s in &self.sections {
            let _ = writeln!(out, "\n== {} ==", s.name);
            let width = s.values.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &s.values {
                let _ = writeln!(out, "{k:<width$}  {}", v.to_text());
            }
            if let Some(t) = &s.table {
                render_table(&mut out, t);
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "\nwarnings:");
            for w in &self.warnings {
                let _ = writeln!(out, "  - {w}");
            }
        }
        out
    }
}

fn render_table(out: &mut String, t: &Table) {
    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Value::to_text).collect()).collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|c| {
            cells
                .iter()
                .filter_map(|r| r.get(c).map(String::len))
                .chain(std::iter::once(t.columns[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    if !cells.is_empty() || !t.columns.is_empty() {
        out.push('\n');
    }
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(out, &t.columns);
    for r in &cells {
        line(out, r);
    }
}
