//! Standard normal distribution function and quantile.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// `Phi(x)`, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `Phi^{-1}(p)`.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-11);
        assert!((norm_sf(8.0) / 6.22096057427174e-16 - 1.0).abs() < 1e-9);
        assert!((norm_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((norm_quantile(1e-20) + 9.262340089798408).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        // the upper half is limited by the resolution of Phi near 1
        for i in -80..=50 {
            let x = i as f64 / 10.0;
            assert!((norm_quantile(norm_cdf(x)) - x).abs() < 1e-6 * (1.0 + x.abs()), "{x}");
        }
    }
}
