use super::trace::{csv_error, parse_number};
use super::Parsed;
use crate::coupling::{CouplingSeries, SeriesKind};
use crate::error::{Error, Result};
use crate::units::mm_to_m;

pub const SERIES_HEADER: [&str; 2] = ["distance_mm", "value"];

/// Coupling measurements `distance_mm,value` (Qc or g in Hz).
pub fn parse_series_csv(bytes: &[u8], kind: SeriesKind) -> Result<Parsed<CouplingSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(Error::parse(
            1,
            1,
            format!("expected header '{}'", SERIES_HEADER.join(",")),
        ));
    }
    let mut points = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 2];
        for (i, slot) in v.iter_mut().enumerate() {
            let c = row.get(i).unwrap_or("");
            *slot = parse_number(c).ok_or_else(|| Error::parse(line, i + 1, format!("'{c}' is not a number")))?;
        }
        points.push((mm_to_m(v[0]), v[1]));
    }
    let series = CouplingSeries::new(points, kind).map_err(|e| Error::Validation(e.to_string()))?;
    Ok(Parsed {
        value: series,
        warnings: Vec::new(),
    })
}
