use crate::error::{Error, Result};
use crate::model::OrdinalDistribution;

/// Largest Pearson correlation between two category-scored variables with
/// marginals `p0` and `p1`, attained by the comonotone coupling. Categories
/// are scored `1..=k`.
pub fn frechet_rho(p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<f64> {
    if p0.k() != p1.k() {
        return Err(Error::CategoryMismatch { left: p0.k(), right: p1.k() });
    }
    let moments = |p: &[f64]| {
        let m: f64 = p.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
        let v: f64 = p.iter().enumerate().map(|(i, w)| ((i + 1) as f64 - m).powi(2) * w).sum();
        (m, v)
    };
    let (m0, v0) = moments(p0.probs());
    let (m1, v1) = moments(p1.probs());
    if v0 <= 1e-15 || v1 <= 1e-15 {
        return Err(Error::Undefined("a marginal is a point mass; correlation undefined".into()));
    }
    // Walk both quantile functions along u in [0, 1].
    let (a, b) = (p0.probs(), p1.probs());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut left_a, mut left_b) = (a[0], b[0]);
    let mut exy = 0.0;
    loop {
        let step = left_a.min(left_b);
        exy += step * ((i + 1) * (j + 1)) as f64;
        left_a -= step;
        left_b -= step;
        if left_a <= 1e-15 {
            i += 1;
            if i == a.len() {
                break;
            }
            left_a += a[i];
        }
        if left_b <= 1e-15 {
            j += 1;
            if j == b.len() {
                break;
            }
            left_b += b[j];
        }
    }
    Ok(((exy - m0 * m1) / (v0 * v1).sqrt()).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_marginals() {
        let p = OrdinalDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert!((frechet_rho(&p, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_undefined() {
        let p = OrdinalDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        let q = OrdinalDistribution::uniform(3);
        assert!(matches!(frechet_rho(&p, &q), Err(Error::Undefined(_))));
    }

    #[test]
    fn binary_closed_form() {
        // comonotone Bernoulli(a), Bernoulli(b) with a <= b: cov = a(1-b)
        let (a, b) = (0.3, 0.6);
        let p0 = OrdinalDistribution::new(vec![1.0 - a, a]).unwrap();
        let p1 = OrdinalDistribution::new(vec![1.0 - b, b]).unwrap();
        let want = a * (1.0 - b) / (a * (1.0 - a) * b * (1.0 - b)).sqrt();
        assert!((frechet_rho(&p0, &p1).unwrap() - want).abs() < 1e-12);
    }
}
