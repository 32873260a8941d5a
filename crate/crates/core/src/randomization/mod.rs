//! Randomisation inference.
//!
//! * [`sharp_null_test`]: test of no effect for any unit, where the observed
//!   outcomes are the whole science table.
//! * [`composite_null_test`]: test of a null in which treatment moves units
//!   up at most one level with given probabilities. Each null science table
//!   is completed stochastically and the null distribution pools many of them.
//! * [`fiducial_interval`]: inverts composite tests over a grid of step-up
//!   probabilities to get an interval for one of them.
//!
//! Assignments are re-drawn with the realised arm sizes fixed.

mod composite;
mod counts;
mod fiducial;
mod hypergeometric;
mod sharp;
mod statistic;

use serde::{Deserialize, Serialize};

pub use composite::{complete_science_table, composite_null_test, NullSpec};
pub use counts::{PairCounts, Rerandomizer};
pub use fiducial::{
    fiducial_interval, invert_p_curve, sample_nuisance, uniform_grid, Budget, FiducialResult,
    FiducialSpec, GridPoint, Inversion, NuisanceDraw, NuisanceSpec,
};
pub use hypergeometric::LogFactorials;
pub use sharp::sharp_null_test;
pub use statistic::{estimate_q, ArmStatistic, DistanceStatistic, StatisticChoice, StepUpEstimate};

/// Null draws within this of the observed statistic count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    /// `Pr(T >= t_obs)`.
    Upper,
    /// `Pr(T <= t_obs)`.
    Lower,
    /// `min(1, 2 min(upper, lower))`.
    TwoSided,
}

/// Outcome of a randomisation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub observed: f64,
    pub null_draws: Vec<f64>,
    pub tail: Tail,
    /// Fraction of null draws at least as extreme as `observed` in `tail`.
    pub p_value: f64,
    /// Randomisations per null science table.
    pub permutations: usize,
    /// Number of null science tables (1 for the sharp null).
    pub tables: usize,
}

impl TestResult {
    pub(crate) fn new(observed: f64, null_draws: Vec<f64>, tail: Tail, permutations: usize, tables: usize) -> Self {
        let mut r = TestResult { observed, null_draws, tail, p_value: 0.0, permutations, tables };
        r.p_value = r.p_value_for(tail);
        r
    }

    fn count_at_least(&self) -> usize {
        self.null_draws.iter().filter(|&&t| t >= self.observed - TIE_TOLERANCE).count()
    }

    fn count_at_most(&self) -> usize {
        self.null_draws.iter().filter(|&&t| t <= self.observed + TIE_TOLERANCE).count()
    }

    pub fn upper_tail_p(&self) -> f64 {
        self.count_at_least() as f64 / self.null_draws.len() as f64
    }

    pub fn lower_tail_p(&self) -> f64 {
        self.count_at_most() as f64 / self.null_draws.len() as f64
    }

    pub fn two_sided_p(&self) -> f64 {
        (2.0 * self.upper_tail_p().min(self.lower_tail_p())).min(1.0)
    }

    pub fn p_value_for(&self, tail: Tail) -> f64 {
        match tail {
            Tail::Upper => self.upper_tail_p(),
            Tail::Lower => self.lower_tail_p(),
            Tail::TwoSided => self.two_sided_p(),
        }
    }

    /// Upper-tail p-value counting the observed assignment as one of the
    /// randomisations: `(1 + #{T >= t_obs}) / (n + 1)`. Never below
    /// `1 / (n + 1)`.
    pub fn corrected_upper_p(&self) -> f64 {
        (1 + self.count_at_least()) as f64 / (self.null_draws.len() + 1) as f64
    }

    pub fn null_range(&self) -> (f64, f64) {
        self.null_draws.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        })
    }

    pub fn null_mean(&self) -> f64 {
        self.null_draws.iter().sum::<f64>() / self.null_draws.len() as f64
    }

    /// Equal-width histogram of the null draws as `(lower edge, upper edge, count)`.
    pub fn histogram(&self, bins: usize) -> Vec<(f64, f64, usize)> {
        let (lo, hi) = self.null_range();
        let bins = bins.max(1);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &t in &self.null_draws {
            let b = (((t - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
            .collect()
    }
}
