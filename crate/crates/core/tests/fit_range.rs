use coaxline::resonator::{fit_hanger, synthesize_trace, HangerModelParams};

fn round_trip(qi: f64, qc: f64, phi: f64, seed: u64) -> (f64, f64) {
    let p = HangerModelParams {
        f0: 7.7e9,
        qi,
        qc_mag: qc,
        phi,
        amp: 0.9,
        theta0: 0.3,
        tau: 40e-9,
    };
    let span = 5.0 * p.f0 / p.loaded_q();
    let t = synthesize_trace(&p, 401, span, Some(60.0), seed).unwrap();
    let r = fit_hanger(&t).unwrap();
    (r.params.qi / qi, r.params.qc_mag / qc)
}

#[test]
fn strong_coupling_recovers_qc() {
    for seed in 0..5 {
        let (_, qc) = round_trip(5e6, 1e3, 0.1, seed);
        assert!((qc - 1.0).abs() < 0.05, "seed {seed}: {qc}");
    }
}

#[test]
fn weak_coupling_recovers_qc() {
    for seed in 0..5 {
        let (_, qc) = round_trip(5e6, 1e8, 0.1, seed);
        assert!((qc - 1.0).abs() < 0.05, "seed {seed}: {qc}");
    }
}

#[test]
fn measured_device_recovers_both() {
    for seed in 0..20 {
        let (qi, qc) = round_trip(5.98e6, 4.27e6, 0.1, seed);
        assert!(
            (qi - 1.0).abs() < 0.02 && (qc - 1.0).abs() < 0.02,
            "seed {seed}: {qi} {qc}"
        );
    }
}
