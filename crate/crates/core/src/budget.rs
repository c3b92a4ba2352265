//! Participation-ratio loss accounting.
//!
//! Each source limits the internal quality factor to `Q_material / p`; the
//! sources add as loss rates, `1/Qi = Σ p_i / Q_i`. Participations and
//! material quality factors are intervals, and interval operations carry
//! their endpoints monotonically.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Closed interval of positive reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        positive("interval lower end", lo)?;
        positive("interval upper end", hi)?;
        if lo > hi {
            return Err(Error::invalid(format!("interval [{lo}, {hi}] is reversed")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(x, x)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    EstablishedLowerBound,
    InferredFromDevice,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::EstablishedLowerBound => "established_lower_bound",
            BoundKind::InferredFromDevice => "inferred_from_device",
        }
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "established_lower_bound" => Ok(BoundKind::EstablishedLowerBound),
            "inferred_from_device" => Ok(BoundKind::InferredFromDevice),
            other => Err(Error::invalid(format!(
                "unknown bound kind '{other}' (expected established_lower_bound or inferred_from_device)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSource {
    pub name: String,
    pub p: Interval,
    pub q_material: Interval,
    pub bound_kind: BoundKind,
}

impl LossSource {
    pub fn new(name: impl Into<String>, p: Interval, q_material: Interval, bound_kind: BoundKind) -> Result<Self> {
        check_participation(p.hi)?;
        Ok(Self {
            name: name.into(),
            p,
            q_material,
            bound_kind,
        })
    }

    /// Range of Qi this source alone allows.
    pub fn q_limit(&self) -> Interval {
        Interval {
            lo: self.q_material.lo / self.p.hi,
            hi: self.q_material.hi / self.p.lo,
        }
    }

    /// Point loss rate p/Q used for totals: midpoint participation against
    /// the lower (conservative) material quality.
    pub fn loss_rate(&self) -> f64 {
        self.p.mid() / self.q_material.lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipationBudget {
    sources: Vec<LossSource>,
    pub qi_measured_best: Option<f64>,
}

impl ParticipationBudget {
    pub fn new(sources: Vec<LossSource>, qi_measured_best: Option<f64>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &sources {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Validation(format!("duplicate loss source '{}'", s.name)));
            }
        }
        if let Some(q) = qi_measured_best {
            positive("best measured Qi", q)?;
        }
        Ok(Self {
            sources,
            qi_measured_best,
        })
    }

    pub fn sources(&self) -> &[LossSource] {
        &self.sources
    }
}

fn check_participation(p: f64) -> Result<f64> {
    positive("participation", p)?;
    if p > 1.0 {
        return Err(Error::invalid(format!("participation must be at most 1, got {p}")));
    }
    Ok(p)
}

/// Q_limit = Q_material / p.
pub fn q_limit(p: f64, q_material: f64) -> Result<f64> {
    check_participation(p)?;
    positive("material quality factor", q_material)?;
    Ok(q_material / p)
}

/// Smallest material Q consistent with attributing all loss to one source:
/// p·Qi.
pub fn material_bound(p: f64, qi_measured: f64) -> Result<f64> {
    check_participation(p)?;
    positive("measured Qi", qi_measured)?;
    Ok(p * qi_measured)
}

pub fn material_bound_interval(p: Interval, qi_measured: f64) -> Result<Interval> {
    Ok(Interval {
        lo: material_bound(p.lo, qi_measured)?,
        hi: material_bound(p.hi, qi_measured)?,
    })
}

pub fn q_limit_interval(p: Interval, q_material: Interval) -> Result<Interval> {
    Ok(Interval {
        lo: q_limit(p.hi, q_material.lo)?,
        hi: q_limit(p.lo, q_material.hi)?,
    })
}

/// 1/Qi = Σ p_i/Q_i with each source's point loss rate.
pub fn total_qi(budget: &ParticipationBudget) -> Result<f64> {
    if budget.sources.is_empty() {
        return Err(Error::IncompleteBudget);
    }
    Ok(1.0 / budget.sources.iter().map(LossSource::loss_rate).sum::<f64>())
}

/// Qi range from the worst (largest p, smallest Q) to the best case.
pub fn total_qi_range(budget: &ParticipationBudget) -> Result<Interval> {
    if budget.sources.is_empty() {
        return Err(Error::IncompleteBudget);
    }
    let worst: f64 = budget.sources.iter().map(|s| s.p.hi / s.q_material.lo).sum();
    let best: f64 = budget.sources.iter().map(|s| s.p.lo / s.q_material.hi).sum();
    Ok(Interval {
        lo: 1.0 / worst,
        hi: 1.0 / best,
    })
}

/// Fractional loss shares, largest first.
pub fn dominant_source(budget: &ParticipationBudget) -> Result<Vec<(String, f64)>> {
    if budget.sources.is_empty() {
        return Err(Error::IncompleteBudget);
    }
    let total: f64 = budget.sources.iter().map(LossSource::loss_rate).sum();
    let mut shares: Vec<(String, f64)> = budget
        .sources
        .iter()
        .map(|s| (s.name.clone(), s.loss_rate() / total))
        .collect();
    shares.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(shares)
}

/// Material Q that puts Q_material/p_i at or above every measured Qi_i.
pub fn conservative_scale(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut q = 0.0f64;
    for &(p, qi) in points {
        q = q.max(material_bound(p, qi)?);
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamSpec {
    /// Distance from the seam, m.
    pub z: f64,
    /// Field attenuation, Np/m.
    pub alpha: f64,
    pub q_seam_reference: f64,
    /// Distance at which the reference Q applies, m.
    pub z_ref: f64,
}

impl SeamSpec {
    pub fn new(z: f64, alpha: f64, q_seam_reference: f64, z_ref: f64) -> Result<Self> {
        positive("seam distance", z)?;
        positive("attenuation", alpha)?;
        positive("reference seam Q", q_seam_reference)?;
        positive("reference distance", z_ref)?;
        Ok(Self {
            z,
            alpha,
            q_seam_reference,
            z_ref,
        })
    }
}

/// Q_seam(z) = Q_ref · e^{2α(z − z_ref)}; seam participation follows field
/// energy.
pub fn seam_q(spec: &SeamSpec) -> Result<f64> {
    let s = SeamSpec::new(spec.z, spec.alpha, spec.q_seam_reference, spec.z_ref)?;
    Ok(s.q_seam_reference * (2.0 * s.alpha * (s.z - s.z_ref)).exp())
}
