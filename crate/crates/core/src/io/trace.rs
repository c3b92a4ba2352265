use std::fmt::Write as _;

use num_complex::Complex64;

use super::Parsed;
use crate::error::{Error, Result};
use crate::resonator::{ResonanceTrace, TraceMeta, MIN_FIT_POINTS};

pub const TRACE_HEADER: [&str; 3] = ["freq_hz", "s21_re", "s21_im"];

/// Reads `freq_hz,s21_re,s21_im` rows. A file sweeping downward is
/// reversed with a warning; any other ordering fault is rejected.
pub fn parse_trace_csv(bytes: &[u8]) -> Result<Parsed<ResonanceTrace>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        let line = header.position().map_or(1, |p| p.line() as usize);
        return Err(Error::parse(
            line,
            1,
            format!(
                "expected header '{}', found '{}'",
                TRACE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut lines = Vec::new();
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::parse(
                line,
                1,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let mut values = [0.0; 3];
        for (col, (field, v)) in record.iter().zip(values.iter_mut()).enumerate() {
            *v = parse_number(field).ok_or_else(|| {
                Error::parse(
                    line,
                    col + 1,
                    format!("'{field}' is not a finite number for {}", TRACE_HEADER[col]),
                )
            })?;
        }
        lines.push(line);
        freqs.push(values[0]);
        s21.push(Complex64::new(values[1], values[2]));
    }
    if freqs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: freqs.len(),
        });
    }

    let mut warnings = Vec::new();
    if freqs.windows(2).all(|w| w[1] < w[0]) {
        freqs.reverse();
        s21.reverse();
        lines.reverse();
        warnings.push("frequencies were descending; trace reordered ascending".to_string());
    }
    check_order(&freqs, &lines)?;
    let trace = ResonanceTrace::new(freqs, s21, TraceMeta::default())?;
    Ok(Parsed { value: trace, warnings })
}

/// Rejects duplicate or out-of-order frequencies, naming file lines.
fn check_order(freqs: &[f64], lines: &[usize]) -> Result<()> {
    let dups: Vec<String> = (1..freqs.len())
        .filter(|&i| freqs[i] == freqs[i - 1])
        .map(|i| format!("{}/{}", lines[i - 1], lines[i]))
        .collect();
    if !dups.is_empty() {
        return Err(Error::Validation(format!(
            "duplicate frequency on lines {}",
            dups.join(", ")
        )));
    }
    let bad: Vec<String> = (1..freqs.len())
        .filter(|&i| freqs[i] < freqs[i - 1])
        .map(|i| lines[i].to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::Validation(format!(
            "frequency not increasing on lines {}",
            bad.join(", ")
        )));
    }
    Ok(())
}

/// Writes the trace with 17 significant digits, so it re-parses bit-exactly.
pub fn write_trace_csv(trace: &ResonanceTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(&TRACE_HEADER.join(","));
    out.push('\n');
    for (f, z) in trace.freqs().iter().zip(trace.s21()) {
        let _ = writeln!(out, "{f:.16e},{:.16e},{:.16e}", z.re, z.im);
    }
    out
}

/// Dot-decimal, locale-independent, finite.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || s.contains(',') {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, 1, e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DataFormat {
    Ri,
    Ma,
    Db,
}

/// Reads a version-1 two-port Touchstone file and keeps S21.
pub fn parse_touchstone(bytes: &[u8]) -> Result<Parsed<ResonanceTrace>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(0, 0, format!("not UTF-8 text: {e}")))?;
    let mut scale = 9;
    let mut format = DataFormat::Ma;
    let mut seen_option = false;
    let mut warnings = Vec::new();
    let mut tokens: Vec<(f64, usize, usize)> = Vec::new();
    let mut words: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('!').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(options) = trimmed.strip_prefix('#') {
            if seen_option {
                warnings.push(format!("extra option line {line_no} ignored"));
                continue;
            }
            seen_option = true;
            (scale, format) = parse_options(options, line_no)?;
            continue;
        }
        if trimmed.starts_with('[') {
            return Err(Error::UnsupportedFormat(format!(
                "line {line_no}: Touchstone version 2 keywords are not supported"
            )));
        }
        let mut offset = 0;
        for word in line.split_whitespace() {
            let start = offset + line[offset..].find(word).unwrap_or(0);
            offset = start + word.len();
            let v = parse_number(word)
                .ok_or_else(|| Error::parse(line_no, start + 1, format!("'{word}' is not a number")))?;
            tokens.push((v, line_no, start + 1));
            words.push(word);
        }
    }

    if !tokens.len().is_multiple_of(9) {
        let (_, line, col) = tokens.last().copied().unwrap_or((0.0, 0, 0));
        return Err(Error::parse(
            line,
            col,
            format!(
                "{} values do not form whole two-port records (9 values per frequency)",
                tokens.len()
            ),
        ));
    }
    let mut freqs = Vec::with_capacity(tokens.len() / 9);
    let mut s21 = Vec::with_capacity(tokens.len() / 9);
    let mut lines = Vec::with_capacity(tokens.len() / 9);
    for (rec, w) in tokens.chunks(9).zip(words.chunks(9)) {
        freqs.push(shift_decimal(w[0], scale).unwrap_or(rec[0].0));
        lines.push(rec[0].1);
        let (a, b) = (rec[3].0, rec[4].0);
        s21.push(match format {
            DataFormat::Ri => Complex64::new(a, b),
            DataFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        });
    }
    if freqs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: freqs.len(),
        });
    }
    check_order(&freqs, &lines)?;
    let trace = ResonanceTrace::new(freqs, s21, TraceMeta::default())?;
    Ok(Parsed { value: trace, warnings })
}

/// Parses a decimal literal multiplied by 10^`pow10`, rounding once.
fn shift_decimal(word: &str, pow10: i32) -> Option<f64> {
    let (mantissa, exp) = match word.find(['e', 'E']) {
        Some(i) => (&word[..i], word[i + 1..].parse::<i32>().ok()?),
        None => (word, 0),
    };
    parse_number(&format!("{mantissa}e{}", exp + pow10))
}

/// Frequency unit as a power of ten, and the data format.
fn parse_options(options: &str, line: usize) -> Result<(i32, DataFormat)> {
    let mut scale = 9;
    let mut format = DataFormat::Ma;
    let mut words = options.split_whitespace();
    while let Some(w) = words.next() {
        match w.to_ascii_uppercase().as_str() {
            "HZ" => scale = 0,
            "KHZ" => scale = 3,
            "MHZ" => scale = 6,
            "GHZ" => scale = 9,
            "S" => {}
            "Y" | "Z" | "H" | "G" => {
                return Err(Error::UnsupportedFormat(format!(
                    "line {line}: parameter type {w} (only S is supported)"
                )))
            }
            "RI" => format = DataFormat::Ri,
            "MA" => format = DataFormat::Ma,
            "DB" => format = DataFormat::Db,
            "R" => {
                let r = words.next().and_then(parse_number);
                if !matches!(r, Some(v) if v > 0.0) {
                    return Err(Error::parse(line, 1, "option R needs a positive reference impedance"));
                }
            }
            other => {
                return Err(Error::UnsupportedFormat(format!("line {line}: option token '{other}'")));
            }
        }
    }
    Ok((scale, format))
}
