use proptest::prelude::*;

use coaxline::resonator::{fit_batch, fit_hanger, synthesize_trace, FitOptions, HangerModelParams};

fn measured_device() -> HangerModelParams {
    HangerModelParams {
        f0: 7.7e9,
        qi: 5.98e6,
        qc_mag: 4.27e6,
        phi: 0.1,
        amp: 0.9,
        theta0: 0.0,
        tau: 40e-9,
    }
}

fn span(p: &HangerModelParams) -> f64 {
    5.0 * p.f0 / p.loaded_q()
}

#[test]
fn batch_equals_serial() {
    let traces: Vec<_> = (0..12u64)
        .map(|s| {
            let p = HangerModelParams {
                qc_mag: 10f64.powf(3.0 + s as f64 * 0.4),
                ..measured_device()
            };
            synthesize_trace(&p, 401, span(&p), Some(55.0), s).unwrap()
        })
        .collect();
    let concurrent = fit_batch(&traces, FitOptions::default());
    for (t, c) in traces.iter().zip(concurrent) {
        assert_eq!(c.unwrap(), fit_hanger(t).unwrap());
    }
    let mut reversed = traces.clone();
    reversed.reverse();
    let back: Vec<_> = fit_batch(&reversed, FitOptions::default()).into_iter().rev().collect();
    for (t, b) in traces.iter().zip(back) {
        assert_eq!(b.unwrap(), fit_hanger(t).unwrap());
    }
}

/// Reported standard errors fall as 1/sqrt(power SNR): slope −1 of ln(SE)
/// against ln(amplitude SNR) over 30 dB.
#[test]
fn standard_errors_scale_with_snr() {
    let p = measured_device();
    let snrs_db = [30.0, 40.0, 50.0, 60.0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for db in snrs_db {
        let traces: Vec<_> = (0..20u64)
            .map(|s| synthesize_trace(&p, 401, span(&p), Some(db), 500 + s).unwrap())
            .collect();
        let fits: Vec<_> = fit_batch(&traces, FitOptions::default())
            .into_iter()
            .map(Result::unwrap)
            .collect();
        let se = fits.iter().map(|f| f.std_errors.qi).sum::<f64>() / fits.len() as f64;
        xs.push(db / 20.0 * std::f64::consts::LN_10);
        ys.push(se.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() <= 0.1, "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stored_quality_factors_obey_convention(
        qi in 1e4f64..1e7,
        log_ratio in -1.5f64..1.5,
        phi in -0.6f64..0.6,
        seed in any::<u64>(),
    ) {
        let p = HangerModelParams { qi, qc_mag: qi * 10f64.powf(log_ratio), phi, ..measured_device() };
        let f = fit_hanger(&synthesize_trace(&p, 401, span(&p), Some(50.0), seed).unwrap()).unwrap();
        let lhs = 1.0 / f.loaded_q;
        let rhs = 1.0 / f.params.qi + f.params.phi.cos() / f.params.qc_mag;
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-12, "{lhs} vs {rhs}");
        prop_assert!((f.qc_real - f.params.qc_mag / f.params.phi.cos()).abs() <= 1e-12 * f.qc_real.abs());
    }
}
