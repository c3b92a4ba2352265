use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{model_s21_hanger, HangerModelParams, ResonanceTrace, TraceMeta, MIN_FIT_POINTS};
use crate::error::{positive, Error, Result};

/// Per-quadrature noise standard deviation for a given SNR (dB), where
/// SNR = amp² / E|n|².
pub fn noise_sigma(amp: f64, snr_db: f64) -> f64 {
    amp * 10f64.powf(-snr_db / 20.0) / std::f64::consts::SQRT_2
}

/// Model trace on a uniform grid centred on f0, plus circular complex
/// Gaussian noise. `snr_db = None` (or +inf) disables noise.
pub fn synthesize_trace(
    params: &HangerModelParams,
    n_points: usize,
    span: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<ResonanceTrace> {
    params.validate()?;
    if n_points < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: n_points,
        });
    }
    positive("span", span)?;
    let start = params.f0 - span / 2.0;
    let step = span / (n_points - 1) as f64;
    let freqs: Vec<f64> = (0..n_points).map(|i| start + step * i as f64).collect();

    let sigma = match snr_db {
        Some(db) if db.is_finite() => noise_sigma(params.amp, db),
        Some(db) if db.is_nan() => return Err(Error::invalid("SNR must not be NaN")),
        _ => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s21 = freqs
        .iter()
        .map(|&f| {
            let clean = model_s21_hanger(params, f);
            if sigma == 0.0 {
                clean
            } else {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                clean + Complex64::new(re, im) * sigma
            }
        })
        .collect();
    ResonanceTrace::new(
        freqs,
        s21,
        TraceMeta {
            label: format!("synthetic seed={seed}"),
            ..TraceMeta::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HangerModelParams {
        HangerModelParams {
            f0: 7.7e9,
            qi: 5.98e6,
            qc_mag: 4.27e6,
            phi: 0.1,
            amp: 0.9,
            theta0: 0.3,
            tau: 40e-9,
        }
    }

    #[test]
    fn noiseless_equals_model() {
        let p = params();
        let t = synthesize_trace(&p, 64, 2e4, None, 1).unwrap();
        for (f, z) in t.freqs().iter().zip(t.s21()) {
            assert_eq!(*z, model_s21_hanger(&p, *f));
        }
        let t_inf = synthesize_trace(&p, 64, 2e4, Some(f64::INFINITY), 1).unwrap();
        assert_eq!(t.s21(), t_inf.s21());
    }

    #[test]
    fn deterministic_for_seed() {
        let a = synthesize_trace(&params(), 200, 2e4, Some(30.0), 42).unwrap();
        let b = synthesize_trace(&params(), 200, 2e4, Some(30.0), 42).unwrap();
        let bits = |t: &ResonanceTrace| -> Vec<(u64, u64)> {
            t.s21().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let c = synthesize_trace(&params(), 200, 2e4, Some(30.0), 43).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn noise_power_matches_snr() {
        // Statistical oracle: sample variance of (noisy − clean) vs amp²·10^(−SNR/10).
        let p = params();
        let n = 20_000;
        let noisy = synthesize_trace(&p, n, 1e5, Some(25.0), 9).unwrap();
        let clean = synthesize_trace(&p, n, 1e5, None, 9).unwrap();
        let power: f64 = noisy
            .s21()
            .iter()
            .zip(clean.s21())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let expected = p.amp * p.amp * 10f64.powf(-2.5);
        assert!((power / expected - 1.0).abs() < 0.05, "{}", power / expected);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(synthesize_trace(&params(), 7, 1e4, None, 0).is_err());
        assert!(synthesize_trace(&params(), 100, 0.0, None, 0).is_err());
        let mut bad = params();
        bad.qi = 0.0;
        assert!(synthesize_trace(&bad, 100, 1e4, None, 0).is_err());
    }
}
