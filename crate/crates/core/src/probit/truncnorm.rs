//! Normal draws restricted to an interval.

use rand::Rng;

use super::normal::{norm_cdf, norm_quantile};

/// Beyond this many standard deviations the inverse-CDF method is replaced
/// by exponential rejection.
const TAIL: f64 = 6.0;

/// Draw from `N(mean, 1)` restricted to `(lower, upper)`. Returns `None`
/// when the interval is empty.
pub fn sample_truncated<R: Rng + ?Sized>(rng: &mut R, mean: f64, lower: f64, upper: f64) -> Option<f64> {
    let (a, b) = (lower - mean, upper - mean);
    if !(a < b) {
        return None;
    }
    Some(mean + standard(rng, a, b))
}

fn standard<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    if a >= TAIL {
        tail(rng, a, b)
    } else if b <= -TAIL {
        -tail(rng, -b, -a)
    } else if a >= 0.0 {
        -inverse_cdf(rng, -b, -a)
    } else {
        inverse_cdf(rng, a, b)
    }
}

/// Inverse CDF on `(a, b)` with `a < 0`, so `Phi(a)` carries full precision.
fn inverse_cdf<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let pa = norm_cdf(a);
    let pb = norm_cdf(b);
    let u: f64 = rng.random();
    if pb - pa <= 1e-14 * pb.max(1e-300) {
        // density is flat to working precision
        return a + u * (b - a);
    }
    norm_quantile(pa + u * (pb - pa)).clamp(a, b)
}

/// Exponential rejection sampler for `(a, b)` with `a` far in the upper tail.
fn tail<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    let mass = if width.is_finite() { -(-lambda * width).exp_m1() } else { 1.0 };
    loop {
        let u: f64 = rng.random();
        let x = a - (-u * mass).ln_1p() / lambda;
        let v: f64 = rng.random();
        if x < b && v <= (-0.5 * (x - lambda) * (x - lambda)).exp() {
            return x;
        }
    }
}
