//! File formats: S21 traces (CSV, Touchstone), device parameter tables and
//! files, loss budgets and per-diameter participation sweeps.
//!
//! Numbers are parsed with a dot decimal separator only, independent of
//! locale. Machine-facing output uses 17 significant digits.

mod budget;
mod device;
mod series;
mod trace;

use std::path::Path;

pub use budget::{parse_budget_csv, parse_sweep_csv, write_limit_curves, LimitCurves, SweepTable, BUDGET_HEADER};
pub(crate) use device::toml_error;
pub use device::{parse_device_file, parse_device_table, DeviceFile, DeviceParams, DeviceRecord, DEVICE_COLUMNS};
pub use series::{parse_series_csv, SERIES_HEADER};
pub use trace::{parse_touchstone, parse_trace_csv, write_trace_csv, TRACE_HEADER};

use crate::error::{Error, Result};
use crate::resonator::ResonanceTrace;

/// A parsed value with any non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a trace, choosing the parser from the extension (`.s2p` is
/// Touchstone, anything else CSV). The file name becomes the trace label.
pub fn read_trace(path: &Path) -> Result<Parsed<ResonanceTrace>> {
    let bytes = read_file(path)?;
    let is_touchstone = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("s2p"));
    let mut parsed = if is_touchstone {
        parse_touchstone(&bytes)
    } else {
        parse_trace_csv(&bytes)
    }
    .map_err(|e| with_path(e, path))?;
    parsed.value.meta.label = path.display().to_string();
    Ok(parsed)
}

/// Prefixes parse and validation messages with the offending file.
pub(crate) fn with_path(e: Error, path: &Path) -> Error {
    let p = path.display();
    match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{p}: {message}"),
        },
        Error::Validation(m) => Error::Validation(format!("{p}: {m}")),
        Error::UnsupportedFormat(m) => Error::UnsupportedFormat(format!("{p}: {m}")),
        other => other,
    }
}

/// 1-based (line, column) of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_from_one() {
        let t = "ab\ncd\nef";
        assert_eq!(line_col(t, 0), (1, 1));
        assert_eq!(line_col(t, 4), (2, 2));
        assert_eq!(line_col(t, 6), (3, 1));
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_file(Path::new("/nonexistent/trace.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/trace.csv"));
        assert_eq!(e.exit_code(), 3);
    }
}
