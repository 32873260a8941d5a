use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Regression design with the conjugate g-prior `beta ~ N(0, n (X'X)^{-1})`.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    p: usize,
    /// Row-major `n x p`.
    x: Vec<f64>,
    /// `(X'X)^{-1}`.
    xtx_inv: DMatrix<f64>,
    /// Lower Cholesky factor of `n/(n+1) (X'X)^{-1}`.
    post_chol: DMatrix<f64>,
}

impl Design {
    pub fn new(n: usize, p: usize, x: Vec<f64>) -> Result<Self> {
        if x.len() != n * p {
            return Err(Error::LengthMismatch { expected: n * p, got: x.len() });
        }
        let m = DMatrix::from_row_slice(n, p, &x);
        let xtx = m.transpose() * &m;
        let chol = xtx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("design matrix is not of full column rank".into()))?;
        let xtx_inv = chol.inverse();
        let shrink = n as f64 / (n as f64 + 1.0);
        let post_chol = (&xtx_inv * shrink)
            .cholesky()
            .ok_or_else(|| Error::Numerical("posterior covariance is not positive definite".into()))?
            .l();
        Ok(Design { n, p, x, xtx_inv, post_chol })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn xtx_inv(&self) -> &DMatrix<f64> {
        &self.xtx_inv
    }

    /// `x_i' beta`.
    pub fn linear(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }

    /// Posterior mean `n/(n+1) (X'X)^{-1} X'z`.
    pub fn posterior_mean(&self, z: &[f64]) -> Vec<f64> {
        let mut xtz = DVector::zeros(self.p);
        for i in 0..self.n {
            for (c, v) in self.row(i).iter().enumerate() {
                xtz[c] += v * z[i];
            }
        }
        let shrink = self.n as f64 / (self.n as f64 + 1.0);
        (&self.xtx_inv * xtz * shrink).iter().copied().collect()
    }

    /// Posterior covariance `n/(n+1) (X'X)^{-1}`.
    pub fn posterior_cov(&self) -> DMatrix<f64> {
        &self.xtx_inv * (self.n as f64 / (self.n as f64 + 1.0))
    }

    /// Draw `beta | z`.
    pub fn draw_beta<R: Rng + ?Sized>(&self, rng: &mut R, z: &[f64]) -> Vec<f64> {
        let mean = self.posterior_mean(z);
        let e = DVector::from_iterator(self.p, (0..self.p).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let dev = &self.post_chol * e;
        mean.iter().zip(dev.iter()).map(|(m, d)| m + d).collect()
    }

    /// Draw `beta` from the prior `N(0, n (X'X)^{-1})`.
    pub fn draw_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let e = DVector::from_iterator(self.p, (0..self.p).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let scale = (self.n as f64 + 1.0).sqrt();
        (&self.post_chol * e).iter().map(|d| d * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    #[test]
    fn intercept_only_posterior() {
        let n = 10;
        let d = Design::new(n, 1, vec![1.0; n]).unwrap();
        let z: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let m = d.posterior_mean(&z);
        assert!((m[0] - n as f64 / (n as f64 + 1.0) * 4.5).abs() < 1e-12);
        assert!((d.posterior_cov()[(0, 0)] - 1.0 / (n as f64 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_cross_product_gives_zero_mean() {
        let d = Design::new(4, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let m = d.posterior_mean(&[1.0, -1.0, -1.0, 1.0]);
        assert!(m.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn draws_match_moments() {
        let d = Design::new(6, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, -1.0]).unwrap();
        let z = [0.3, 1.0, -0.2, 0.8, 2.0, -1.0];
        let mean = d.posterior_mean(&z);
        let cov = d.posterior_cov();
        let mut rng = SeedSpec::new(1).rng();
        let reps = 100_000;
        let mut acc = [0.0; 2];
        for _ in 0..reps {
            let b = d.draw_beta(&mut rng, &z);
            acc[0] += b[0];
            acc[1] += b[1];
        }
        for c in 0..2 {
            let se = (cov[(c, c)] / reps as f64).sqrt();
            assert!((acc[c] / reps as f64 - mean[c]).abs() < 3.0 * se);
        }
    }

    #[test]
    fn singular_design_rejected() {
        assert!(matches!(Design::new(3, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn empty_design() {
        let d = Design::new(3, 0, vec![]).unwrap();
        let mut rng = SeedSpec::new(1).rng();
        assert!(d.draw_beta(&mut rng, &[1.0, 2.0, 3.0]).is_empty());
        assert_eq!(d.linear(1, &[]), 0.0);
    }
}
