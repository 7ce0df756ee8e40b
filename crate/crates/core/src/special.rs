//! Gaussian density helpers and the gamma-family functions used by the
//! high-resolution constants.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`, accurate in the lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Φ(x)`, accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Digamma `ψ(x)` for `x > 0`.
///
/// Shifts the argument above 10 with `ψ(x) = ψ(x+1) - 1/x`, then sums the
/// asymptotic Bernoulli series.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma is only defined here for positive arguments");
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // B_2k / (2k) coefficients, k = 1..7.
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 / x - series
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 25 digits.
    #[test]
    fn digamma_reference_values() {
        let cases = [
            (0.5, -1.963510026021423479440976),
            (1.0, -0.5772156649015328606065121),
            (2.5, 0.7031566406452431872256903),
            (3.7, 1.167153539361511385873864),
            (12.5, 2.48519565127491204815044),
            (100.0, 4.600161852738087400198606),
        ];
        for (x, want) in cases {
            let got = digamma(x);
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0), "ψ({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn digamma_half_integer_recurrence() {
        // ψ(k + 1/2) = -γ - 2 ln 2 + Σ_{i=1..k} 2/(2i-1)
        let euler = 0.5772156649015329;
        let mut acc = -euler - 2.0 * std::f64::consts::LN_2;
        for k in 1..100 {
            acc += 2.0 / (2 * k - 1) as f64;
            let x = k as f64 + 0.5;
            assert!((digamma(x) - acc).abs() < 1e-13 * acc.abs().max(1.0));
        }
    }

    #[test]
    fn cdf_tails() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.3) + normal_sf(1.3) - 1.0).abs() < 1e-15);
        assert!(normal_sf(10.0) > 0.0 && normal_sf(10.0) < 1e-22);
    }
}
