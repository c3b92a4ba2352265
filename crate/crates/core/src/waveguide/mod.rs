//! Circular-waveguide mode cutoffs and below-cutoff attenuation.
//!
//! The enclosure is treated as an ideal circular guide whose partial
//! substrate fill is folded into one scalar effective permittivity. Loading
//! lowers every cutoff by `1/sqrt(loading)`; the evanescent decay constant
//! is then `(2π/c)·sqrt(f_c² − f²)`.

pub mod bessel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::units::{np_per_m_to_db_per_mm, MM, SPEED_OF_LIGHT};

/// Effective permittivity of the 2.8 mm sapphire-loaded enclosure, calibrated
/// so TE11 attenuation at 5.4 GHz is 8.5 dB/mm. Reproduced by
/// [`calibrate_loading`] in the tests.
pub const CALIBRATED_LOADING: f64 = 1.782_209_478_547_607;

/// Enclosure diameter of the reference device (m).
pub const REFERENCE_DIAMETER: f64 = 2.8 * MM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideSpec {
    diameter: f64,
    loading_factor: f64,
}

impl WaveguideSpec {
    pub fn new(diameter: f64, loading_factor: f64) -> Result<Self> {
        positive("diameter", diameter)?;
        if !loading_factor.is_finite() || loading_factor < 1.0 {
            return Err(Error::invalid(format!(
                "loading factor must be finite and >= 1, got {loading_factor}"
            )));
        }
        Ok(Self {
            diameter,
            loading_factor,
        })
    }

    pub fn empty(diameter: f64) -> Result<Self> {
        Self::new(diameter, 1.0)
    }

    /// The reference 2.8 mm enclosure with the calibrated substrate loading.
    pub fn reference() -> Self {
        Self {
            diameter: REFERENCE_DIAMETER,
            loading_factor: CALIBRATED_LOADING,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn loading_factor(&self) -> f64 {
        self.loading_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeFamily {
    TE,
    TM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeId {
    pub family: ModeFamily,
    pub n: u32,
    pub m: u32,
}

impl ModeId {
    pub const TE11: ModeId = ModeId {
        family: ModeFamily::TE,
        n: 1,
        m: 1,
    };
    pub const TM01: ModeId = ModeId {
        family: ModeFamily::TM,
        n: 0,
        m: 1,
    };
    pub const TE21: ModeId = ModeId {
        family: ModeFamily::TE,
        n: 2,
        m: 1,
    };

    pub fn new(family: ModeFamily, n: u32, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("radial mode index m must be >= 1"));
        }
        Ok(Self { family, n, m })
    }

    /// Bessel root setting the cutoff: J'_n for TE, J_n for TM.
    pub fn bessel_root(&self) -> f64 {
        bessel::root(self.family == ModeFamily::TE, self.n, self.m)
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            ModeFamily::TE => "TE",
            ModeFamily::TM => "TM",
        };
        if self.n < 10 && self.m < 10 {
            write!(f, "{family}{}{}", self.n, self.m)
        } else {
            write!(f, "{family}{}_{}", self.n, self.m)
        }
    }
}

impl FromStr for ModeId {
    type Err = Error;

    /// Accepts `TE11`, `tm01`, and `TE12_3` (underscore for multi-digit indices).
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let bad = || Error::invalid(format!("unrecognized mode {s:?}; expected e.g. TE11 or TM01"));
        let (family, rest) = if let Some(rest) = upper.strip_prefix("TE") {
            (ModeFamily::TE, rest)
        } else if let Some(rest) = upper.strip_prefix("TM") {
            (ModeFamily::TM, rest)
        } else {
            return Err(bad());
        };
        let (n, m) = match rest.split_once('_') {
            Some((n, m)) => (n.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?),
            None if rest.len() == 2 && rest.bytes().all(|b| b.is_ascii_digit()) => {
                let b = rest.as_bytes();
                ((b[0] - b'0') as u32, (b[1] - b'0') as u32)
            }
            None => return Err(bad()),
        };
        ModeId::new(family, n, m)
    }
}

/// Evanescent field decay constant of one mode at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationConstant {
    /// Np/m.
    pub alpha: f64,
    /// Hz.
    pub frequency: f64,
    pub mode: ModeId,
}

impl AttenuationConstant {
    pub fn np_per_mm(&self) -> f64 {
        self.alpha * MM
    }

    pub fn db_per_mm(&self) -> f64 {
        np_per_m_to_db_per_mm(self.alpha)
    }

    /// Distance over which the field falls by 1/e (m).
    pub fn scale_length(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn field_ratio(&self, z: f64) -> Result<f64> {
        field_attenuation_ratio(self.alpha, z)
    }
}

/// Mode cutoff `root·c / (π·d·sqrt(loading))` in Hz.
pub fn cutoff_frequency(spec: &WaveguideSpec, mode: ModeId) -> f64 {
    mode.bessel_root() * SPEED_OF_LIGHT / (std::f64::consts::PI * spec.diameter * spec.loading_factor.sqrt())
}

pub fn attenuation_constant(spec: &WaveguideSpec, mode: ModeId, frequency: f64) -> Result<AttenuationConstant> {
    positive("frequency", frequency)?;
    let cutoff = cutoff_frequency(spec, mode);
    if frequency >= cutoff {
        return Err(Error::PropagatingMode {
            freq_hz: frequency,
            cutoff_hz: cutoff,
        });
    }
    let k_cutoff = 2.0 * std::f64::consts::PI * cutoff / SPEED_OF_LIGHT;
    let k = 2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT;
    Ok(AttenuationConstant {
        alpha: ((k_cutoff - k) * (k_cutoff + k)).sqrt(),
        frequency,
        mode,
    })
}

/// `exp(-alpha·z)` for alpha in Np/m and z in m.
pub fn field_attenuation_ratio(alpha: f64, z: f64) -> Result<f64> {
    crate::error::finite("alpha", alpha)?;
    crate::error::finite("z", z)?;
    if z < 0.0 {
        return Err(Error::invalid(format!("distance must be >= 0, got {z}")));
    }
    Ok((-alpha * z).exp())
}

/// Loading factor giving attenuation `target_alpha` (Np/m) at `frequency`.
pub fn calibrate_loading(diameter: f64, mode: ModeId, frequency: f64, target_alpha: f64) -> Result<f64> {
    positive("diameter", diameter)?;
    positive("frequency", frequency)?;
    positive("target attenuation", target_alpha)?;
    // With f_c = f_c0/sqrt(eps): alpha² + k² = k_c0²/eps.
    let k_c0 = 2.0 * mode.bessel_root() / diameter;
    let k = 2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT;
    let loading = k_c0 * k_c0 / (target_alpha * target_alpha + k * k);
    if loading < 1.0 {
        return Err(Error::invalid(format!(
            "target attenuation {target_alpha} Np/m exceeds the empty-guide value; loading would be {loading}"
        )));
    }
    Ok(loading)
}
