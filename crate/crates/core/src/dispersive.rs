//! Qubit–resonator parameter bookkeeping: detunings, mode Q from lifetimes,
//! pure dephasing and measured-vs-simulated deviation tables.
//!
//! Every frequency, dispersive shift and linewidth is stored as an ordinary
//! frequency in Hz (the "/2π" value).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveSet {
    pub omega_q: Option<f64>,
    pub omega_r: Option<f64>,
    pub omega_s: Option<f64>,
    pub chi_qr: Option<f64>,
    pub chi_qs: Option<f64>,
    pub chi_qq: Option<f64>,
    pub chi_rr: Option<f64>,
    pub kappa_r: Option<f64>,
    pub kappa_q: Option<f64>,
    /// Thermal excited-state population.
    pub p_e: Option<f64>,
}

impl DispersiveSet {
    /// (name, value) for every field in a fixed order.
    pub fn fields(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("omega_q", self.omega_q),
            ("omega_r", self.omega_r),
            ("omega_s", self.omega_s),
            ("chi_qr", self.chi_qr),
            ("chi_qs", self.chi_qs),
            ("chi_qq", self.chi_qq),
            ("chi_rr", self.chi_rr),
            ("kappa_r", self.kappa_r),
            ("kappa_q", self.kappa_q),
            ("p_e", self.p_e),
        ]
    }

    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        for (name, v) in self.fields() {
            let Some(v) = v else { continue };
            match name {
                "omega_q" | "omega_r" | "omega_s" | "kappa_r" | "kappa_q" => {
                    positive(name, v)?;
                }
                "p_e" => {
                    if !(0.0..1.0).contains(&v) {
                        return Err(Error::invalid(format!("p_e must lie in [0, 1), got {v}")));
                    }
                }
                _ => {
                    finite(name, v)?;
                }
            }
        }
        let mut warnings = Vec::new();
        if let (Some(qq), Some(qr)) = (self.chi_qq, self.chi_qr) {
            if qq.abs() < 10.0 * qr.abs() {
                warnings.push(format!(
                    "|chi_qq| = {:.4e} Hz is not much larger than |chi_qr| = {:.4e} Hz; set is not transmon-like",
                    qq.abs(),
                    qr.abs()
                ));
            }
        }
        Ok(warnings)
    }
}

/// Coherence times in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSet {
    pub t1: Option<f64>,
    pub t2_star: Option<f64>,
    pub t2_echo: Option<f64>,
}

impl CoherenceSet {
    pub fn validate(&self) -> Result<Vec<String>> {
        for (name, v) in [("T1", self.t1), ("T2*", self.t2_star), ("T2", self.t2_echo)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        let mut warnings = Vec::new();
        if let Some(t1) = self.t1 {
            for (name, v) in [("T2*", self.t2_star), ("T2", self.t2_echo)] {
                if let Some(t2) = v {
                    if t2 > 2.0 * t1 * 1.05 {
                        warnings.push(format!(
                            "{name} = {t2:.4e} s exceeds 2*T1 = {:.4e} s by more than 5%",
                            2.0 * t1
                        ));
                    }
                }
            }
        }
        Ok(warnings)
    }
}

/// Q = 2π·f·T1.
pub fn q_from_lifetime(f: f64, t1: f64) -> Result<f64> {
    positive("frequency", f)?;
    positive("lifetime", t1)?;
    Ok(2.0 * PI * f * t1)
}

/// T1 = Q / (2π·f).
pub fn lifetime_from_q(f: f64, q: f64) -> Result<f64> {
    positive("frequency", f)?;
    positive("quality factor", q)?;
    Ok(q / (2.0 * PI * f))
}

/// Q = f / κ for a linewidth κ given as an ordinary frequency.
pub fn q_from_linewidth(f: f64, kappa: f64) -> Result<f64> {
    positive("frequency", f)?;
    positive("linewidth", kappa)?;
    Ok(f / kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephasingKind {
    Ramsey,
    Echo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dephasing {
    /// Seconds; infinite when lifetime-limited.
    pub t_phi: f64,
    pub lifetime_limited: bool,
}

/// Relative tolerance on T2 = 2·T1 for the lifetime-limited case.
pub const LIFETIME_LIMIT_TOL: f64 = 1e-9;

/// 1/T_phi = 1/T2 − 1/(2·T1).
pub fn pure_dephasing(c: &CoherenceSet, kind: DephasingKind) -> Result<Dephasing> {
    let t1 = c.t1.ok_or_else(|| Error::IncompleteSet("T1 is required".into()))?;
    let t2 = match kind {
        DephasingKind::Ramsey => c.t2_star,
        DephasingKind::Echo => c.t2_echo,
    }
    .ok_or_else(|| Error::IncompleteSet(format!("{kind:?} T2 is required")))?;
    positive("T1", t1)?;
    positive("T2", t2)?;
    let two_t1 = 2.0 * t1;
    if (t2 - two_t1).abs() <= LIFETIME_LIMIT_TOL * two_t1 {
        return Ok(Dephasing {
            t_phi: f64::INFINITY,
            lifetime_limited: true,
        });
    }
    if t2 > two_t1 {
        return Err(Error::NonPhysicalDephasing { t2, two_t1 });
    }
    Ok(Dephasing {
        t_phi: 1.0 / (1.0 / t2 - 1.0 / two_t1),
        lifetime_limited: false,
    })
}

/// Δ = ω_q − ω_r (signed, Hz).
pub fn detuning(set: &DispersiveSet) -> Result<f64> {
    match (set.omega_q, set.omega_r) {
        (Some(q), Some(r)) => {
            positive("omega_q", q)?;
            positive("omega_r", r)?;
            Ok(q - r)
        }
        _ => Err(Error::IncompleteSet("detuning needs omega_q and omega_r".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub name: String,
    pub unit: String,
    pub measured: f64,
    pub simulated: f64,
    /// 100·|measured − simulated| / |measured|.
    pub deviation_pct: f64,
}

/// Normalization used by [`deviation_table`].
pub const DEVIATION_CONVENTION: &str = "100*|measured - simulated|/|measured|";

pub fn deviation_pct(measured: f64, simulated: f64) -> f64 {
    let diff = (measured - simulated).abs();
    if diff == 0.0 {
        0.0
    } else {
        100.0 * diff / measured.abs()
    }
}

/// One row per field present in both sets, in field order.
pub fn deviation_table(measured: &DispersiveSet, simulated: &DispersiveSet) -> Result<Vec<DeviationRow>> {
    let rows: Vec<DeviationRow> = measured
        .fields()
        .iter()
        .zip(simulated.fields())
        .filter_map(|(&(name, m), (_, s))| {
            let (m, s) = (m?, s?);
            Some(DeviationRow {
                name: name.to_string(),
                unit: if name == "p_e" { "1" } else { "Hz" }.to_string(),
                measured: m,
                simulated: s,
                deviation_pct: deviation_pct(m, s),
            })
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::IncompleteSet(
            "measured and simulated sets share no fields".into(),
        ));
    }
    for r in &rows {
        finite(&r.name, r.measured)?;
        finite(&r.name, r.simulated)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PurcellClass {
    PurcellLimited,
    OtherLossDominated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellCheck {
    /// Measured qubit linewidth over the Purcell rate.
    pub ratio: f64,
    pub class: PurcellClass,
}

/// Ratio below which the qubit counts as Purcell-limited.
pub const PURCELL_LIMITED_BELOW: f64 = 2.0;

pub fn purcell_check(purcell_rate: f64, measured_kappa_q: f64) -> Result<PurcellCheck> {
    positive("Purcell rate", purcell_rate)?;
    positive("measured qubit linewidth", measured_kappa_q)?;
    let ratio = measured_kappa_q / purcell_rate;
    Ok(PurcellCheck {
        ratio,
        class: if ratio < PURCELL_LIMITED_BELOW {
            PurcellClass::PurcellLimited
        } else {
            PurcellClass::OtherLossDominated
        },
    })
}

/// Purcell check with the rate taken from a simulated set's qubit linewidth.
pub fn purcell_check_set(simulated: &DispersiveSet, measured_kappa_q: f64) -> Result<PurcellCheck> {
    let rate = simulated
        .kappa_q
        .ok_or_else(|| Error::IncompleteSet("simulated kappa_q (Purcell rate) is required".into()))?;
    purcell_check(rate, measured_kappa_q)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: x.len(),
        });
    }
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        finite(&format!("x[{i}]"), a)?;
        finite(&format!("y[{i}]"), b)?;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("rank correlation undefined for a constant column"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}
