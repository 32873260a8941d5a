//! Exact hypergeometric sampling for re-randomising count tables.
//!
//! A uniformly random assignment of `n_treated` units out of `N` places a
//! multivariate-hypergeometric number of treated units in each outcome cell.
//! Drawing those counts directly costs a few hypergeometric variates per
//! randomisation instead of a shuffle of all `N` units.

use rand::Rng;

/// `ln(n!)` for `n = 0..=max`.
#[derive(Debug, Clone)]
pub struct LogFactorials(Vec<f64>);

impl LogFactorials {
    pub fn new(max: usize) -> Self {
        let mut t = Vec::with_capacity(max + 1);
        t.push(0.0);
        let mut acc = 0.0f64;
        for i in 1..=max {
            acc += (i as f64).ln();
            t.push(acc);
        }
        LogFactorials(t)
    }

    pub fn max(&self) -> usize {
        self.0.len() - 1
    }

    #[inline]
    pub fn ln_fact(&self, n: u64) -> f64 {
        self.0[n as usize]
    }

    #[inline]
    fn ln_choose(&self, n: u64, r: u64) -> f64 {
        self.ln_fact(n) - self.ln_fact(r) - self.ln_fact(n - r)
    }

    /// Probability of `x` successes when drawing `draws` from `population`
    /// items of which `successes` are marked.
    pub fn pmf(&self, population: u64, successes: u64, draws: u64, x: u64) -> f64 {
        let lo = draws.saturating_sub(population - successes);
        let hi = draws.min(successes);
        if x < lo || x > hi {
            return 0.0;
        }
        (self.ln_choose(successes, x) + self.ln_choose(population - successes, draws - x)
            - self.ln_choose(population, draws))
        .exp()
    }

    /// Draw from the hypergeometric law by inversion, searching outward from
    /// the mode so the expected cost is proportional to the standard deviation.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        population: u64,
        successes: u64,
        draws: u64,
    ) -> u64 {
        debug_assert!(successes <= population && draws <= population);
        let failures = population - successes;
        let lo = draws.saturating_sub(failures);
        let hi = draws.min(successes);
        if lo == hi {
            return lo;
        }
        let mode = (((draws + 1) as f64 * (successes + 1) as f64) / (population + 2) as f64)
            .floor() as u64;
        let mode = mode.clamp(lo, hi);
        let p_mode = self.pmf(population, successes, draws, mode);

        let mut u: f64 = rng.random();
        u -= p_mode;
        if u <= 0.0 {
            return mode;
        }
        let (s, f, n) = (successes as f64, failures as f64, draws as f64);
        // p(x+1)/p(x) = (s - x)(n - x) / ((x + 1)(f - n + x + 1))
        let up = |x: f64| (s - x) * (n - x) / ((x + 1.0) * (f - n + x + 1.0));
        let mut below = mode;
        let mut above = mode;
        let mut p_below = p_mode;
        let mut p_above = p_mode;
        loop {
            let mut moved = false;
            if below > lo {
                let x = (below - 1) as f64;
                p_below /= up(x);
                below -= 1;
                u -= p_below;
                if u <= 0.0 {
                    return below;
                }
                moved = true;
            }
            if above < hi {
                p_above *= up(above as f64);
                above += 1;
                u -= p_above;
                if u <= 0.0 {
                    return above;
                }
                moved = true;
            }
            if !moved {
                // rounding left a sliver of mass unassigned
                return mode;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    fn choose(n: u64, r: u64) -> f64 {
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn pmf_matches_binomial_coefficients() {
        let lf = LogFactorials::new(60);
        for &(pop, s, n) in &[(10u64, 4u64, 3u64), (60, 20, 30), (7, 7, 3), (12, 0, 5)] {
            let mut total = 0.0;
            for x in 0..=n {
                let exact = if x <= s && n - x <= pop - s {
                    choose(s, x) * choose(pop - s, n - x) / choose(pop, n)
                } else {
                    0.0
                };
                let got = lf.pmf(pop, s, n, x);
                assert!((got - exact).abs() < 1e-12, "{pop} {s} {n} {x}: {got} vs {exact}");
                total += got;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_frequencies_match_pmf() {
        let lf = LogFactorials::new(500);
        let mut rng = SeedSpec::new(11).rng();
        for &(pop, s, n) in &[(20u64, 6u64, 9u64), (500, 167, 250), (30, 29, 4)] {
            let reps = 200_000;
            let mut hist = vec![0u64; n as usize + 1];
            for _ in 0..reps {
                hist[lf.sample(&mut rng, pop, s, n) as usize] += 1;
            }
            for (x, &h) in hist.iter().enumerate() {
                let p = lf.pmf(pop, s, n, x as u64);
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                let freq = h as f64 / reps as f64;
                assert!((freq - p).abs() <= 5.0 * se + 1e-9, "{pop} {s} {n} x={x}: {freq} vs {p}");
            }
        }
    }

    #[test]
    fn degenerate_supports() {
        let lf = LogFactorials::new(10);
        let mut rng = SeedSpec::new(1).rng();
        assert_eq!(lf.sample(&mut rng, 10, 10, 4), 4);
        assert_eq!(lf.sample(&mut rng, 10, 0, 4), 0);
        assert_eq!(lf.sample(&mut rng, 10, 3, 10), 3);
    }
}
