use std::fmt::Write as _;

use super::trace::{csv_error, parse_number};
use super::Parsed;
use crate::budget::{conservative_scale, q_limit, BoundKind, Interval, LossSource};
use crate::error::{Error, Result};

pub const BUDGET_HEADER: [&str; 5] = ["name", "p_min", "p_max", "q_material", "bound_kind"];

/// Budget rows `name,p_min,p_max,q_material,bound_kind`; `q_material` may
/// be a single value or a range written `lo..hi`.
pub fn parse_budget_csv(bytes: &[u8]) -> Result<Parsed<Vec<LossSource>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
    if header.iter().collect::<Vec<_>>() != BUDGET_HEADER {
        return Err(Error::parse(
            1,
            1,
            format!("expected header '{}'", BUDGET_HEADER.join(",")),
        ));
    }
    let mut sources = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| {
            parse_number(cell(i)).ok_or_else(|| {
                Error::parse(
                    line,
                    i + 1,
                    format!("'{}' is not a number for {}", cell(i), BUDGET_HEADER[i]),
                )
            })
        };
        let name = cell(0).to_string();
        if name.is_empty() {
            return Err(Error::parse(line, 1, "source name is blank"));
        }
        let (p_min, p_max) = (num(1)?, num(2)?);
        let q = parse_range(cell(3))
            .ok_or_else(|| Error::parse(line, 4, format!("'{}' is not a number or lo..hi range", cell(3))))?;
        let kind: BoundKind = cell(4)
            .parse()
            .map_err(|e: Error| Error::parse(line, 5, e.to_string()))?;
        let source = Interval::new(p_min, p_max)
            .and_then(|p| Ok((p, Interval::new(q.0, q.1)?)))
            .and_then(|(p, q)| LossSource::new(name.clone(), p, q, kind))
            .map_err(|e| Error::Validation(format!("line {line} ({name}): {e}")))?;
        sources.push(source);
    }
    Ok(Parsed {
        value: sources,
        warnings: Vec::new(),
    })
}

fn parse_range(s: &str) -> Option<(f64, f64)> {
    match s.split_once("..") {
        Some((a, b)) => Some((parse_number(a)?, parse_number(b)?)),
        None => parse_number(s).map(|v| (v, v)),
    }
}

/// Per-diameter participations: `diameter_mm`, an optional `qi_measured`
/// column, then one participation column per source.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub diameters_mm: Vec<f64>,
    pub qi_measured: Option<Vec<Option<f64>>>,
    pub sources: Vec<(String, Vec<f64>)>,
}

pub fn parse_sweep_csv(bytes: &[u8]) -> Result<Parsed<SweepTable>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
    if header.get(0) != Some("diameter_mm") {
        return Err(Error::parse(1, 1, "first column must be 'diameter_mm'"));
    }
    let has_measured = header.get(1) == Some("qi_measured");
    let first_source = if has_measured { 2 } else { 1 };
    let names: Vec<String> = header.iter().skip(first_source).map(String::from).collect();
    if names.is_empty() {
        return Err(Error::parse(1, first_source + 1, "no participation columns"));
    }
    let mut table = SweepTable {
        diameters_mm: Vec::new(),
        qi_measured: has_measured.then(Vec::new),
        sources: names.into_iter().map(|n| (n, Vec::new())).collect(),
    };
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| {
            let c = row.get(i).unwrap_or("");
            parse_number(c).ok_or_else(|| Error::parse(line, i + 1, format!("'{c}' is not a number")))
        };
        table.diameters_mm.push(num(0)?);
        if let Some(m) = table.qi_measured.as_mut() {
            let c = row.get(1).unwrap_or("");
            m.push(if c.is_empty() || c == "-" { None } else { Some(num(1)?) });
        }
        for (k, (name, col)) in table.sources.iter_mut().enumerate() {
            let p = num(first_source + k)?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Validation(format!(
                    "line {line}: participation {p} for {name} is outside (0, 1]"
                )));
            }
            col.push(p);
        }
    }
    if table.diameters_mm.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(Parsed {
        value: table,
        warnings: Vec::new(),
    })
}

/// Q_material/p curves per source.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCurves {
    pub diameters_mm: Vec<f64>,
    pub qi_measured: Option<Vec<Option<f64>>>,
    /// (source, material Q used, limit per diameter).
    pub curves: Vec<(String, f64, Vec<f64>)>,
}

impl SweepTable {
    /// With measured Qi present, each curve's material Q is the smallest
    /// that keeps the curve at or above every measured point; otherwise the
    /// lower material bound is taken from the matching budget source.
    pub fn limit_curves(&self, budget: Option<&[LossSource]>) -> Result<LimitCurves> {
        let mut curves = Vec::new();
        for (name, ps) in &self.sources {
            let measured: Vec<(f64, f64)> = match &self.qi_measured {
                Some(m) => ps.iter().zip(m).filter_map(|(&p, q)| q.map(|q| (p, q))).collect(),
                None => Vec::new(),
            };
            let q_mat = if !measured.is_empty() {
                conservative_scale(&measured)?
            } else {
                budget
                    .and_then(|b| b.iter().find(|s| &s.name == name))
                    .map(|s| s.q_material.lo)
                    .ok_or_else(|| {
                        Error::Validation(format!(
                            "no measured Qi and no budget entry to scale the '{name}' curve"
                        ))
                    })?
            };
            let limits = ps.iter().map(|&p| q_limit(p, q_mat)).collect::<Result<Vec<_>>>()?;
            curves.push((name.clone(), q_mat, limits));
        }
        Ok(LimitCurves {
            diameters_mm: self.diameters_mm.clone(),
            qi_measured: self.qi_measured.clone(),
            curves,
        })
    }
}

pub fn write_limit_curves(c: &LimitCurves) -> String {
    let mut out = String::from("diameter_mm,qi_measured");
    for (name, _, _) in &c.curves {
        let _ = write!(out, ",{name}_q_limit");
    }
    out.push('\n');
    for (i, d) in c.diameters_mm.iter().enumerate() {
        let _ = write!(out, "{d:.16e},");
        if let Some(q) = c.qi_measured.as_ref().and_then(|m| m[i]) {
            let _ = write!(out, "{q:.16e}");
        }
        for (_, _, limits) in &c.curves {
            let _ = write!(out, ",{:.16e}", limits[i]);
        }
        out.push('\n');
    }
    out
}
