use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::trace::{csv_error, parse_number};
use super::{line_col, Parsed};
use crate::dispersive::{CoherenceSet, DispersiveSet};
use crate::error::{Error, Result};
use crate::resonator::FitResult;
use crate::units::{mhz_to_hz, us_to_s};

/// Device parameters as written in files: MHz for frequencies, dispersive
/// shifts and linewidths, µs for times, millions for storage Qi.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub omega_q_mhz: Option<f64>,
    pub omega_r_mhz: Option<f64>,
    pub omega_s_mhz: Option<f64>,
    pub chi_qr_mhz: Option<f64>,
    pub chi_qs_mhz: Option<f64>,
    pub chi_qq_mhz: Option<f64>,
    pub chi_rr_mhz: Option<f64>,
    pub kappa_r_mhz: Option<f64>,
    pub kappa_q_mhz: Option<f64>,
    pub p_e: Option<f64>,
    pub t1_us: Option<f64>,
    pub t2_star_us: Option<f64>,
    pub t2_us: Option<f64>,
    pub t1_s_us: Option<f64>,
    pub qi_s_1e6: Option<f64>,
}

/// Recognised device-table columns besides `device` and `notes`.
pub const DEVICE_COLUMNS: [&str; 15] = [
    "omega_q_mhz",
    "omega_r_mhz",
    "omega_s_mhz",
    "chi_qr_mhz",
    "chi_qs_mhz",
    "chi_qq_mhz",
    "chi_rr_mhz",
    "kappa_r_mhz",
    "kappa_q_mhz",
    "p_e",
    "t1_us",
    "t2_star_us",
    "t2_us",
    "t1_s_us",
    "qi_s_1e6",
];

impl DeviceParams {
    fn slot(&mut self, column: &str) -> Option<&mut Option<f64>> {
        Some(match column {
            "omega_q_mhz" => &mut self.omega_q_mhz,
            "omega_r_mhz" => &mut self.omega_r_mhz,
            "omega_s_mhz" => &mut self.omega_s_mhz,
            "chi_qr_mhz" => &mut self.chi_qr_mhz,
            "chi_qs_mhz" => &mut self.chi_qs_mhz,
            "chi_qq_mhz" => &mut self.chi_qq_mhz,
            "chi_rr_mhz" => &mut self.chi_rr_mhz,
            "kappa_r_mhz" => &mut self.kappa_r_mhz,
            "kappa_q_mhz" => &mut self.kappa_q_mhz,
            "p_e" => &mut self.p_e,
            "t1_us" => &mut self.t1_us,
            "t2_star_us" => &mut self.t2_star_us,
            "t2_us" => &mut self.t2_us,
            "t1_s_us" => &mut self.t1_s_us,
            "qi_s_1e6" => &mut self.qi_s_1e6,
            _ => return None,
        })
    }

    /// In Hz.
    pub fn dispersive(&self) -> DispersiveSet {
        let hz = |v: Option<f64>| v.map(mhz_to_hz);
        DispersiveSet {
            omega_q: hz(self.omega_q_mhz),
            omega_r: hz(self.omega_r_mhz),
            omega_s: hz(self.omega_s_mhz),
            chi_qr: hz(self.chi_qr_mhz),
            chi_qs: hz(self.chi_qs_mhz),
            chi_qq: hz(self.chi_qq_mhz),
            chi_rr: hz(self.chi_rr_mhz),
            kappa_r: hz(self.kappa_r_mhz),
            kappa_q: hz(self.kappa_q_mhz),
            p_e: self.p_e,
        }
    }

    /// Qubit coherence in s.
    pub fn qubit(&self) -> CoherenceSet {
        CoherenceSet {
            t1: self.t1_us.map(us_to_s),
            t2_star: self.t2_star_us.map(us_to_s),
            t2_echo: self.t2_us.map(us_to_s),
        }
    }

    /// Storage-mode coherence in s.
    pub fn storage(&self) -> CoherenceSet {
        CoherenceSet {
            t1: self.t1_s_us.map(us_to_s),
            ..CoherenceSet::default()
        }
    }

    pub fn storage_qi(&self) -> Option<f64> {
        self.qi_s_1e6.map(|q| q * 1e6)
    }

    fn validate(&self) -> Result<Vec<String>> {
        let mut w = self.dispersive().validate()?;
        w.extend(self.qubit().validate()?);
        w.extend(self.storage().validate()?);
        if let Some(q) = self.qi_s_1e6 {
            crate::error::positive("qi_s_1e6", q)?;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub id: String,
    pub dispersive: DispersiveSet,
    pub qubit: CoherenceSet,
    pub storage: CoherenceSet,
    pub storage_qi: Option<f64>,
    pub fit_results: Vec<FitResult>,
    pub notes: String,
}

impl DeviceRecord {
    fn from_params(id: String, p: &DeviceParams, notes: String) -> Self {
        Self {
            id,
            dispersive: p.dispersive(),
            qubit: p.qubit(),
            storage: p.storage(),
            storage_qi: p.storage_qi(),
            fit_results: Vec::new(),
            notes,
        }
    }

    /// Warns when an attached fit sits more than 1 MHz from every recorded
    /// mode frequency.
    pub fn check_fit_frequencies(&self) -> Vec<String> {
        let d = &self.dispersive;
        let modes: Vec<f64> = [d.omega_q, d.omega_r, d.omega_s].into_iter().flatten().collect();
        self.fit_results
            .iter()
            .filter(|r| !modes.iter().any(|m| (m - r.params.f0).abs() <= 1e6))
            .map(|r| {
                format!(
                    "{}: fit at {:.6e} Hz matches no recorded mode within 1 MHz",
                    self.id, r.params.f0
                )
            })
            .collect()
    }
}

/// One device per row, columns as in [`DEVICE_COLUMNS`]. Blank or `-` cells are
/// absent values; unknown columns are ignored with a warning.
pub fn parse_device_table(bytes: &[u8]) -> Result<Parsed<Vec<DeviceRecord>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let header = reader.headers().map_err(|e| csv_error(&e))?.clone();
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, name) in header.iter().enumerate() {
        if !seen.insert(name) {
            return Err(Error::parse(1, i + 1, format!("duplicate column '{name}'")));
        }
        if name != "device" && name != "notes" && !DEVICE_COLUMNS.contains(&name) {
            warnings.push(format!("unknown column '{name}' ignored"));
        }
    }
    let id_col = header
        .iter()
        .position(|h| h == "device")
        .ok_or_else(|| Error::parse(1, 1, "missing required column 'device'"))?;

    let mut records = Vec::new();
    let mut ids = BTreeSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let id = row.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::parse(line, id_col + 1, "device id is blank"));
        }
        if !ids.insert(id.clone()) {
            return Err(Error::Validation(format!("device id '{id}' repeated on line {line}")));
        }
        let mut params = DeviceParams::default();
        let mut notes = String::new();
        for (col, (name, cell)) in header.iter().zip(row.iter()).enumerate() {
            if name == "notes" {
                notes = cell.to_string();
                continue;
            }
            let Some(slot) = params.slot(name) else { continue };
            if cell.is_empty() || cell == "-" {
                continue;
            }
            *slot = Some(
                parse_number(cell)
                    .ok_or_else(|| Error::parse(line, col + 1, format!("'{cell}' is not a number for {name}")))?,
            );
        }
        let w = params
            .validate()
            .map_err(|e| Error::Validation(format!("device {id} (line {line}): {e}")))?;
        warnings.extend(w.into_iter().map(|m| format!("device {id}: {m}")));
        records.push(DeviceRecord::from_params(id, &params, notes));
    }
    Ok(Parsed {
        value: records,
        warnings,
    })
}

/// Single-device TOML file with a `[measured]` and an optional
/// `[simulated]` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceFile {
    #[serde(default)]
    pub device: Option<String>,
    #[serde(default)]
    pub notes: Option<String>,
    pub measured: DeviceParams,
    #[serde(default)]
    pub simulated: Option<DeviceParams>,
}

pub fn parse_device_file(text: &str) -> Result<Parsed<DeviceFile>> {
    let file: DeviceFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let mut warnings = Vec::new();
    for (label, p) in [
        ("measured", Some(&file.measured)),
        ("simulated", file.simulated.as_ref()),
    ] {
        if let Some(p) = p {
            let w = p.validate().map_err(|e| Error::Validation(format!("[{label}]: {e}")))?;
            warnings.extend(w.into_iter().map(|m| format!("[{label}] {m}")));
        }
    }
    Ok(Parsed { value: file, warnings })
}

pub(crate) fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let (line, col) = e.span().map_or((0, 0), |s| line_col(text, s.start));
    Error::parse(line, col, e.message().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "device,omega_q_mhz,omega_s_mhz,omega_r_mhz,chi_qr_mhz,chi_qs_mhz,kappa_r_mhz,t1_us,t2_star_us,t2_us,t1_s_us,qi_s_1e6";

    #[test]
    fn single_row_and_blank_cells() {
        let text = format!("{HEADER}\n1C,5431.1,7125.7,9406.5,-,2.00,0.34,68,26,41,143,6.40\n");
        let p = parse_device_table(text.as_bytes()).unwrap();
        assert_eq!(p.value.len(), 1);
        let r = &p.value[0];
        assert_eq!(r.id, "1C");
        assert_eq!(r.dispersive.chi_qr, None);
        assert_eq!(r.dispersive.omega_q, Some(5431.1e6));
        assert_eq!(r.storage.t1, Some(143e-6));
        assert_eq!(r.storage_qi, Some(6.4e6));
        assert!(p.warnings.is_empty());
        let blank = text.replace(",-,", ",,");
        assert_eq!(
            parse_device_table(blank.as_bytes()).unwrap().value[0].dispersive.chi_qr,
            None
        );
    }

    #[test]
    fn unknown_column_warns() {
        let text = "device,t1_us,color\nX,10,blue\n";
        let p = parse_device_table(text.as_bytes()).unwrap();
        assert_eq!(p.value[0].qubit.t1, Some(10e-6));
        assert_eq!(p.warnings, vec!["unknown column 'color' ignored".to_string()]);
    }

    #[test]
    fn bad_cell_and_duplicates() {
        let text = "device,t1_us,t2_us\nA,10,x\n";
        assert!(matches!(
            parse_device_table(text.as_bytes()),
            Err(Error::Parse { line: 2, column: 3, .. })
        ));
        let dup = "device,t1_us\nA,10\nA,11\n";
        assert!(matches!(parse_device_table(dup.as_bytes()), Err(Error::Validation(_))));
        let no_id = "t1_us\n10\n";
        assert!(matches!(parse_device_table(no_id.as_bytes()), Err(Error::Parse { .. })));
        let negative = "device,omega_q_mhz\nA,-5\n";
        assert!(matches!(
            parse_device_table(negative.as_bytes()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn toml_device_file() {
        let text = r#"
device = "D1"
[measured]
omega_q_mhz = 5441.9
omega_r_mhz = 9269.5
chi_qr_mhz = -2.31
t1_us = 69.9
t2_us = 29.2
[simulated]
omega_q_mhz = 5828.3
"#;
        let f = parse_device_file(text).unwrap().value;
        assert_eq!(f.device.as_deref(), Some("D1"));
        assert!((f.measured.qubit().t2_echo.unwrap() / 29.2e-6 - 1.0).abs() < 1e-15);
        assert_eq!(f.simulated.unwrap().dispersive().omega_q, Some(5828.3e6));
        let typo = text.replace("chi_qr_mhz", "chi_qrr_mhz");
        match parse_device_file(&typo) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fit_frequency_check() {
        use crate::resonator::{fit_hanger, synthesize_trace, HangerModelParams};
        let p = HangerModelParams::canonical(7.1607e9, 1e6, 5e5, 0.0);
        let t = synthesize_trace(&p, 201, 7.1607e9 / p.loaded_q() * 6.0, Some(60.0), 1).unwrap();
        let fit = fit_hanger(&t).unwrap();
        let text = format!("{HEADER}\n3C,5378.8,7160.7,9493.3,-,1.58,1.02,72,23,69,250,11.25\n");
        let mut r = parse_device_table(text.as_bytes()).unwrap().value.remove(0);
        r.fit_results.push(fit.clone());
        assert!(r.check_fit_frequencies().is_empty());
        r.dispersive.omega_s = Some(7.17e9);
        assert_eq!(r.check_fit_frequencies().len(), 1);
    }
}
