//! Bessel-function roots for circular-waveguide cutoffs.
//!
//! Low-order roots come from a table; anything else is found by scanning
//! for a sign change and bisecting on a quadrature evaluation of J_n.

use std::f64::consts::PI;

/// First three positive roots of J_n, n = 0..=2.
const J_ROOTS: [[f64; 3]; 3] = [
    [2.404_825_557_696, 5.520_078_110_286, 8.653_727_912_911],
    [3.831_705_970_208, 7.015_586_669_816, 10.173_468_135_063],
    [5.135_622_301_841, 8.417_244_140_400, 11.619_841_172_149],
];

/// First three positive roots of J'_n, n = 0..=2 (x = 0 excluded).
const JP_ROOTS: [[f64; 3]; 3] = [
    [3.831_705_970_208, 7.015_586_669_816, 10.173_468_135_063],
    [1.841_183_781_341, 5.331_442_773_525, 8.536_316_366_346],
    [3.054_236_928_227, 6.706_133_194_158, 9.969_467_823_088],
];

/// J_n(x) from the integral (1/π)∫₀^π cos(nτ − x sin τ) dτ.
///
/// The integrand extended to [0, 2π) is smooth and periodic, so the
/// trapezoidal rule converges exponentially once the node count exceeds
/// roughly x + n.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let nodes = 64 + 2 * (x.abs().ceil() as usize + n as usize);
    let h = 2.0 * PI / nodes as f64;
    let nf = n as f64;
    let sum: f64 = (0..nodes)
        .map(|k| {
            let t = k as f64 * h;
            (nf * t - x * t.sin()).cos()
        })
        .sum();
    sum / nodes as f64
}

/// dJ_n/dx via the recurrence J'_n = (J_{n−1} − J_{n+1}) / 2, with J'_0 = −J_1.
pub fn bessel_j_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

pub fn tabulated_root(derivative: bool, n: u32, m: u32) -> Option<f64> {
    let table = if derivative { &JP_ROOTS } else { &J_ROOTS };
    if m == 0 {
        return None;
    }
    table.get(n as usize).and_then(|row| row.get(m as usize - 1)).copied()
}

/// m-th positive root (m ≥ 1) of J_n, or of J'_n when `derivative` is set.
pub fn root(derivative: bool, n: u32, m: u32) -> f64 {
    tabulated_root(derivative, n, m).unwrap_or_else(|| computed_root(derivative, n, m))
}

/// Root by scan-and-bisect, independent of the table.
pub fn computed_root(derivative: bool, n: u32, m: u32) -> f64 {
    assert!(m >= 1, "radial index starts at 1");
    let f = |x: f64| {
        if derivative {
            bessel_j_prime(n, x)
        } else {
            bessel_j(n, x)
        }
    };
    // Adjacent roots are separated by more than ~2.4, so a 0.05 step never
    // skips a sign change. No root of J_n or J'_n (other than the origin,
    // which is never counted) lies below x = n.
    let step = 0.05;
    let mut lo = (n as f64).max(1e-3);
    let mut f_lo = f(lo);
    let mut found = 0;
    loop {
        let hi = lo + step;
        let f_hi = f(hi);
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            found += 1;
            if found == m {
                return bisect(f, lo, hi);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-13 * mid {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_known_values() {
        // Reference values from scipy.special.jv.
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_55).abs() < 1e-14);
        assert!((bessel_j(2, 5.0) - 0.046_565_116_277_752_29).abs() < 1e-14);
    }

    #[test]
    fn table_agrees_with_root_finder() {
        for derivative in [false, true] {
            for n in 0..=2 {
                for m in 1..=3 {
                    let t = tabulated_root(derivative, n, m).unwrap();
                    let c = computed_root(derivative, n, m);
                    assert!(
                        ((t - c) / t).abs() < 1e-11,
                        "derivative={derivative} n={n} m={m}: {t} vs {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn higher_roots_are_computed() {
        // Fourth roots (not tabulated) against scipy.special.jn_zeros/jnp_zeros.
        assert!((root(false, 0, 4) - 11.791_534_439_014).abs() < 1e-9);
        assert!((root(true, 1, 4) - 11.706_004_902_592).abs() < 1e-9);
        assert!((root(true, 2, 4) - 13.170_370_856_016).abs() < 1e-9);
    }

    #[test]
    fn roots_increase_with_radial_index() {
        for derivative in [false, true] {
            for n in 0..4 {
                let roots: Vec<f64> = (1..=5).map(|m| root(derivative, n, m)).collect();
                assert!(roots[0] > 0.0);
                assert!(roots.windows(2).all(|w| w[1] > w[0]), "{roots:?}");
            }
        }
    }
}
