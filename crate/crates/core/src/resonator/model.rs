use std::f64::consts::PI;

use num_complex::Complex64;

use super::{HangerModelParams, ResonanceTrace};
use crate::error::{positive, Result};

/// Hanger S21 with background:
/// `a·e^{i(θ0 − 2πfτ)} · [1 − (Ql/|Qc|)·e^{iφ} / (1 + 2i·Ql·(f − f0)/f0)]`.
pub fn model_s21_hanger(p: &HangerModelParams, f: f64) -> Complex64 {
    background(p.amp, p.theta0, p.tau, f) * resonance(p, f)
}

pub(crate) fn background(amp: f64, theta0: f64, tau: f64, f: f64) -> Complex64 {
    Complex64::from_polar(amp, theta0 - 2.0 * PI * f * tau)
}

/// The bracketed resonance factor alone (unit background).
pub(crate) fn resonance(p: &HangerModelParams, f: f64) -> Complex64 {
    let ql = p.loaded_q();
    let k = ql / p.qc_mag;
    let x = 2.0 * ql * (f - p.f0) / p.f0;
    Complex64::new(1.0, 0.0) - Complex64::from_polar(k, p.phi) / Complex64::new(1.0, x)
}

/// Divides every sample by `a·e^{i(θ0 − 2πfτ)}`.
pub fn correct_background(trace: &ResonanceTrace, amp: f64, theta0: f64, tau: f64) -> Result<ResonanceTrace> {
    positive("amplitude", amp)?;
    let s21 = trace
        .freqs()
        .iter()
        .zip(trace.s21())
        .map(|(&f, &z)| z / background(amp, theta0, tau, f))
        .collect();
    Ok(trace.with_s21(s21))
}

/// Inverse of [`correct_background`].
pub fn apply_background(trace: &ResonanceTrace, amp: f64, theta0: f64, tau: f64) -> Result<ResonanceTrace> {
    positive("amplitude", amp)?;
    let s21 = trace
        .freqs()
        .iter()
        .zip(trace.s21())
        .map(|(&f, &z)| z * background(amp, theta0, tau, f))
        .collect();
    Ok(trace.with_s21(s21))
}

/// Removes 2π jumps between consecutive samples.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let d = p - phases[i - 1];
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// Electrical delay (s) from the unwrapped phase slope over the outer 20%
/// of the sweep (10% at each end, at least two points per side).
///
/// The two ends share one slope but get separate intercepts, so the phase
/// step across the resonance does not leak into the slope.
pub fn estimate_delay(trace: &ResonanceTrace) -> f64 {
    let n = trace.len();
    if n < 4 {
        return 0.0;
    }
    let phases = unwrap_phase(&trace.s21().iter().map(|z| z.arg()).collect::<Vec<_>>());
    let k = (n / 10).max(2).min(n / 2);
    let f = trace.freqs();
    let mut num = 0.0;
    let mut den = 0.0;
    for range in [0..k, n - k..n] {
        let m = range.len() as f64;
        let fm = range.clone().map(|i| f[i]).sum::<f64>() / m;
        let pm = range.clone().map(|i| phases[i]).sum::<f64>() / m;
        for i in range {
            num += (f[i] - fm) * (phases[i] - pm);
            den += (f[i] - fm).powi(2);
        }
    }
    if den == 0.0 {
        return 0.0;
    }
    -(num / den) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonator::synthesize_trace;

    #[test]
    fn decoupled_resonator_is_pure_background() {
        let p = HangerModelParams {
            f0: 7.7e9,
            qi: 1e6,
            qc_mag: f64::INFINITY,
            phi: 0.3,
            amp: 0.8,
            theta0: 1.1,
            tau: 30e-9,
        };
        for f in [7.69e9, 7.7e9, 7.71e9] {
            let s = model_s21_hanger(&p, f);
            let b = background(0.8, 1.1, 30e-9, f);
            assert!((s - b).norm() < 1e-15);
        }
    }

    #[test]
    fn critical_coupling_gives_half_depth() {
        let p = HangerModelParams::canonical(5e9, 1e5, 1e5, 0.0);
        let s = model_s21_hanger(&p, 5e9);
        assert!((s - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn measured_device_dip_depth() {
        // Oracle: Ql = (1/Qi + 1/Qc)^-1, depth = 1 - Ql/Qc.
        let ql = 1.0 / (1.0 / 5.98e6 + 1.0 / 4.27e6);
        let p = HangerModelParams::canonical(7.7e9, 5.98e6, 4.27e6, 1e-4);
        let s = model_s21_hanger(&p, 7.7e9);
        assert!((s.norm() - (1.0 - ql / 4.27e6)).abs() < 1e-6);
        assert!((s.norm() - 0.417).abs() < 1e-3);
    }

    #[test]
    fn background_round_trip() {
        let p = HangerModelParams::canonical(6e9, 2e5, 5e4, 0.2);
        let t = synthesize_trace(&p, 101, 6e9 / 4e4 * 5.0, Some(40.0), 3).unwrap();
        let same = correct_background(&t, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(same.s21(), t.s21());
        let there = apply_background(&t, 0.37, -2.0, 75e-9).unwrap();
        let back = correct_background(&there, 0.37, -2.0, 75e-9).unwrap();
        for (a, b) in back.s21().iter().zip(t.s21()) {
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
        assert!(correct_background(&t, 0.0, 0.0, 0.0).is_err());
        assert!(correct_background(&t, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn delay_from_wide_sweep() {
        // Low-Q resonator on a 100 MHz sweep: the ends are far off resonance.
        let p = HangerModelParams {
            f0: 7.7e9,
            qi: 1e5,
            qc_mag: 1e4,
            phi: 0.1,
            amp: 0.9,
            theta0: 0.4,
            tau: 50e-9,
        };
        let t = synthesize_trace(&p, 801, 100e6, Some(60.0), 5).unwrap();
        let tau = estimate_delay(&t);
        assert!((tau - 50e-9).abs() < 0.5e-9, "{tau:e}");
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw: Vec<f64> = (0..50)
            .map(|i| (i as f64 * 0.4 + PI).rem_euclid(2.0 * PI) - PI)
            .collect();
        let un = unwrap_phase(&raw);
        for w in un.windows(2) {
            assert!((w[1] - w[0] - 0.4).abs() < 1e-12);
        }
    }
}
