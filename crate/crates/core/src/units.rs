//! Physical constants and presentation-boundary unit conversions.
//!
//! Everything inside the crate is SI: Hz, s, m, Np/m. Conversions to MHz,
//! µs, mm and dB happen only when reading or writing files.

/// Vacuum speed of light (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// dB per neper for field quantities, 20·log10(e).
pub const DB_PER_NEPER: f64 = 8.685_889_638_065_036;

pub const MHZ: f64 = 1e6;
pub const GHZ: f64 = 1e9;
pub const MM: f64 = 1e-3;
pub const US: f64 = 1e-6;

pub fn mhz_to_hz(x: f64) -> f64 {
    x * MHZ
}

pub fn hz_to_mhz(x: f64) -> f64 {
    x / MHZ
}

// Sub-unit prefixes divide or multiply by the exact integer power of ten,
// so decimal inputs land on the nearest double.
pub fn us_to_s(x: f64) -> f64 {
    x / 1e6
}

pub fn s_to_us(x: f64) -> f64 {
    x * 1e6
}

pub fn mm_to_m(x: f64) -> f64 {
    x / 1e3
}

pub fn m_to_mm(x: f64) -> f64 {
    x * 1e3
}

/// Np/m to dB/mm.
pub fn np_per_m_to_db_per_mm(alpha: f64) -> f64 {
    alpha * DB_PER_NEPER * MM
}

/// dB/mm to Np/m.
pub fn db_per_mm_to_np_per_m(db: f64) -> f64 {
    db / DB_PER_NEPER / MM
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn db_per_neper_matches_definition() {
        assert!((DB_PER_NEPER - 20.0 * std::f64::consts::E.log10()).abs() < 1e-13);
    }

    #[test]
    fn eight_and_a_half_db_per_mm() {
        let np_per_m = db_per_mm_to_np_per_m(8.5);
        assert!((np_per_m * 1e-3 - 0.97860).abs() < 5e-5);
    }

    proptest! {
        #[test]
        fn mhz_round_trip(x in -1e5f64..1e5) {
            let back = hz_to_mhz(mhz_to_hz(x));
            prop_assert!((back - x).abs() <= 1e-15 * x.abs().max(1.0));
        }
    }
}
