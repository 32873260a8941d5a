use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::{PairCounts, Rerandomizer};
use super::hypergeometric::LogFactorials;
use super::statistic::ArmStatistic;
use super::{Tail, TestResult};
use crate::error::{invalid, Error, Result};
use crate::model::{Category, ObservedStudy, OrdinalDistribution, ScienceTable};
use crate::rng::SeedSpec;

/// A null in which treatment moves a unit up at most one category.
///
/// `eta[m]` is the probability that a unit with `Y(0)` at level `m + 1` has
/// `Y(1)` one level higher; `nu` is the marginal law of `Y(0)`. With a single
/// nonzero entry this is the one-level null where only units at level `j`
/// can move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    eta: Vec<f64>,
    nu: OrdinalDistribution,
}

impl NullSpec {
    /// Units at level `j` step up with probability `eta`, nobody else moves.
    pub fn single_level(j: Category, eta: f64, nu: OrdinalDistribution) -> Result<Self> {
        let k = nu.k();
        if j.slot() + 1 >= k {
            return Err(invalid(format!("level {j} has no category above it on a {k}-level scale")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid(format!("eta must lie strictly inside (0, 1), got {eta}")));
        }
        let mut v = vec![0.0; k - 1];
        v[j.slot()] = eta;
        Ok(NullSpec { eta: v, nu })
    }

    /// Every level below the top has its own step-up probability in `[0, 1)`.
    pub fn staircase(eta: Vec<f64>, nu: OrdinalDistribution) -> Result<Self> {
        if eta.len() + 1 != nu.k() {
            return Err(Error::LengthMismatch { expected: nu.k() - 1, got: eta.len() });
        }
        if eta.iter().any(|&e| !(0.0..1.0).contains(&e)) {
            return Err(invalid("step-up probabilities must lie in [0, 1)"));
        }
        Ok(NullSpec { eta, nu })
    }

    pub fn k(&self) -> usize {
        self.nu.k()
    }

    pub fn nu(&self) -> &OrdinalDistribution {
        &self.nu
    }

    pub fn etas(&self) -> &[f64] {
        &self.eta
    }

    /// `Pr(Y(1) = m + 1 | Y(0) = m)`; zero at the top level.
    pub fn step_up_prob(&self, level: Category) -> f64 {
        self.eta.get(level.slot()).copied().unwrap_or(0.0)
    }

    /// `Pr(Y(0) = m - 1 | Y(1) = m)`.
    ///
    /// Mass at `Y(1) = m` comes from `(m - 1, m)` with weight
    /// `eta[m-1] nu[m-1]` and from `(m, m)` with weight `(1 - eta[m]) nu[m]`.
    pub fn step_down_prob(&self, level: Category) -> Result<f64> {
        let s = level.slot();
        if s == 0 {
            return Ok(0.0);
        }
        let eta_below = self.eta[s - 1];
        if eta_below == 0.0 {
            return Ok(0.0);
        }
        let from_below = eta_below * self.nu.probs()[s - 1];
        let stay = (1.0 - self.step_up_prob(level)) * self.nu.probs()[s];
        if from_below + stay <= 0.0 {
            return Err(Error::Undefined(format!(
                "null puts no mass on Y(1) = {level}; step-down probability undefined"
            )));
        }
        Ok(from_below / (from_below + stay))
    }

    fn step_down_probs(&self) -> Result<Vec<f64>> {
        (0..self.k()).map(|s| self.step_down_prob(Category::from_slot(s))).collect()
    }

    fn check_study(&self, study: &ObservedStudy) -> Result<()> {
        if self.k() != study.k() {
            return Err(Error::CategoryMismatch { left: study.k(), right: self.k() });
        }
        Ok(())
    }
}

/// Fill in the missing potential outcome of every unit by a draw from the
/// null. Observed outcomes are never changed.
pub fn complete_science_table(study: &ObservedStudy, null: &NullSpec, seed: SeedSpec) -> Result<ScienceTable> {
    null.check_study(study)?;
    let down = null.step_down_probs()?;
    let mut rng = seed.rng();
    let rows = study
        .units()
        .iter()
        .map(|u| {
            let s = u.y.slot();
            if u.treated {
                let y0 = if down[s] > 0.0 && rng.random::<f64>() < down[s] {
                    Category::from_slot(s - 1)
                } else {
                    u.y
                };
                (y0, u.y)
            } else {
                let up = null.step_up_prob(u.y);
                let y1 = if up > 0.0 && rng.random::<f64>() < up { u.y.next() } else { u.y };
                (u.y, y1)
            }
        })
        .collect();
    let table = ScienceTable::new(study.k(), rows)?;
    match study.labels() {
        Some(l) => table.with_labels(l.to_vec()),
        None => Ok(table),
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Runs composite tests for one study, sharing the count summaries.
pub(crate) struct CompositeRunner {
    control: Vec<u64>,
    treated: Vec<u64>,
    n_treated: u64,
    log_fact: LogFactorials,
}

impl CompositeRunner {
    pub(crate) fn new(study: &ObservedStudy) -> Self {
        let (control, treated) = study.arm_counts();
        CompositeRunner {
            control,
            treated,
            n_treated: study.n_treated() as u64,
            log_fact: LogFactorials::new(study.len()),
        }
    }

    pub(crate) fn observed(&self, statistic: &dyn ArmStatistic) -> f64 {
        statistic.evaluate(&self.control, &self.treated)
    }

    /// Completed table drawn at the count level: equal in law to
    /// [`complete_science_table`] followed by tabulation.
    fn complete<R: Rng + ?Sized>(&self, rng: &mut R, null: &NullSpec, down: &[f64]) -> PairCounts {
        let k = self.control.len();
        let mut pc = PairCounts::zeros(k);
        for s in 0..k {
            let up = binomial(rng, self.control[s], null.step_up_prob(Category::from_slot(s)));
            pc.add(s, s, self.control[s] - up);
            if up > 0 {
                pc.add(s, s + 1, up);
            }
            let from_below = binomial(rng, self.treated[s], down[s]);
            pc.add(s, s, self.treated[s] - from_below);
            if from_below > 0 {
                pc.add(s - 1, s, from_below);
            }
        }
        pc
    }

    pub(crate) fn null_draws(
        &self,
        null: &NullSpec,
        statistic: &dyn ArmStatistic,
        n_tables: usize,
        n_perm: usize,
        seed: SeedSpec,
    ) -> Result<Vec<f64>> {
        if n_tables == 0 || n_perm == 0 {
            return Err(invalid("n_tables and n_perm_per_table must be at least 1"));
        }
        if null.k() != self.control.len() {
            return Err(Error::CategoryMismatch { left: self.control.len(), right: null.k() });
        }
        let down = null.step_down_probs()?;
        let k = self.control.len();
        Ok((0..n_tables)
            .into_par_iter()
            .flat_map_iter(|t| {
                let mut rng = seed.derive(t as u64).rng();
                let table = self.complete(&mut rng, null, &down);
                let rr = Rerandomizer::new(&table, self.n_treated, &self.log_fact);
                let (mut c, mut tr) = (vec![0; k], vec![0; k]);
                let mut out = Vec::with_capacity(n_perm);
                for _ in 0..n_perm {
                    rr.draw(&mut rng, &mut c, &mut tr);
                    out.push(statistic.evaluate(&c, &tr));
                }
                out
            })
            .collect())
    }
}

/// Randomisation test of a [`NullSpec`]. Each of `n_tables` science tables is
/// completed from the null and re-randomised `n_perm_per_table` times; the
/// observed statistic is compared with the pooled draws. The reported
/// p-value is two-sided; the other tails are available on the result.
pub fn composite_null_test(
    study: &ObservedStudy,
    null: &NullSpec,
    statistic: &dyn ArmStatistic,
    n_tables: usize,
    n_perm_per_table: usize,
    seed: SeedSpec,
) -> Result<TestResult> {
    null.check_study(study)?;
    let runner = CompositeRunner::new(study);
    let draws = runner.null_draws(null, statistic, n_tables, n_perm_per_table, seed)?;
    Ok(TestResult::new(runner.observed(statistic), draws, Tail::TwoSided, n_perm_per_table, n_tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reveal;
    use crate::randomization::StepUpEstimate;

    fn cat(i: u32) -> Category {
        Category::new(i).unwrap()
    }

    fn third() -> OrdinalDistribution {
        OrdinalDistribution::uniform(3)
    }

    #[test]
    fn step_down_formula() {
        let n = NullSpec::single_level(cat(1), 0.5, third()).unwrap();
        assert!((n.step_down_prob(cat(2)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(n.step_down_prob(cat(1)).unwrap(), 0.0);
        assert_eq!(n.step_down_prob(cat(3)).unwrap(), 0.0);
        let nu = OrdinalDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        let n = NullSpec::single_level(cat(1), 0.999, nu).unwrap();
        assert_eq!(n.step_down_prob(cat(2)).unwrap(), 1.0);
        let nu = OrdinalDistribution::new(vec![0.0, 0.0, 1.0]).unwrap();
        let n = NullSpec::single_level(cat(1), 0.4, nu).unwrap();
        assert!(matches!(n.step_down_prob(cat(2)), Err(Error::Undefined(_))));
    }

    #[test]
    fn staircase_step_down_matches_joint() {
        let nu = OrdinalDistribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let n = NullSpec::staircase(vec![0.6, 0.3], nu).unwrap();
        // Y(1)=3 from (2,3) with 0.3*0.5 and from (3,3) with 0.3
        assert!((n.step_down_prob(cat(3)).unwrap() - 0.15 / 0.45).abs() < 1e-15);
        assert!((n.step_down_prob(cat(2)).unwrap() - 0.12 / (0.12 + 0.35)).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(NullSpec::single_level(cat(3), 0.5, third()).is_err());
        assert!(NullSpec::single_level(cat(1), 0.0, third()).is_err());
        assert!(NullSpec::single_level(cat(1), 1.0, third()).is_err());
        assert!(NullSpec::staircase(vec![0.1], third()).is_err());
        assert!(NullSpec::staircase(vec![0.1, 1.0], third()).is_err());
    }

    #[test]
    fn completion_preserves_observed_outcomes() {
        let s = ObservedStudy::from_arm_counts(&[30, 40, 20], &[10, 35, 45]).unwrap();
        let null = NullSpec::staircase(vec![0.5, 0.4], third()).unwrap();
        for seed in 0..20 {
            let t = complete_science_table(&s, &null, SeedSpec::new(seed)).unwrap();
            assert_eq!(reveal(&t, &s.assignment()).unwrap(), s);
            for &(y0, y1) in t.rows() {
                assert!(y1 == y0 || y1 == y0.next());
            }
        }
    }

    #[test]
    fn treated_at_level_j_untouched() {
        let s = ObservedStudy::from_pairs(3, &[(1, true), (1, false), (2, true)]).unwrap();
        let null = NullSpec::single_level(cat(1), 0.9, third()).unwrap();
        let t = complete_science_table(&s, &null, SeedSpec::new(3)).unwrap();
        assert_eq!(t.rows()[0], (cat(1), cat(1)));
    }

    #[test]
    fn count_completion_matches_unit_completion_in_mean() {
        let s = ObservedStudy::from_arm_counts(&[30, 40, 20], &[10, 35, 45]).unwrap();
        let null = NullSpec::staircase(vec![0.5, 0.4], third()).unwrap();
        let runner = CompositeRunner::new(&s);
        let down = null.step_down_probs().unwrap();
        let reps = 4000;
        let mut unit = vec![0.0; 9];
        let mut count = vec![0.0; 9];
        let mut rng = SeedSpec::new(77).rng();
        for r in 0..reps {
            let t = complete_science_table(&s, &null, SeedSpec::new(1000 + r)).unwrap();
            for (a, b) in unit.iter_mut().zip(t.pair_counts()) {
                *a += b as f64 / reps as f64;
            }
            let pc = runner.complete(&mut rng, &null, &down);
            for c in 0..9 {
                count[c] += pc.get(c / 3, c % 3) as f64 / reps as f64;
            }
        }
        for (a, b) in unit.iter().zip(&count) {
            assert!((a - b).abs() < 0.25, "{unit:?} {count:?}");
        }
    }

    #[test]
    fn degenerate_study_has_p_one() {
        let s = ObservedStudy::from_arm_counts(&[0, 0, 6], &[0, 0, 4]).unwrap();
        let null = NullSpec::single_level(cat(1), 0.5, third()).unwrap();
        let st = StepUpEstimate { level: cat(1) };
        let r = composite_null_test(&s, &null, &st, 10, 10, SeedSpec::new(1)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.null_draws.len(), 100);
    }

    #[test]
    fn null_mean_increases_with_eta() {
        let s = ObservedStudy::from_arm_counts(&[60, 60, 60], &[30, 70, 80]).unwrap();
        let st = StepUpEstimate { level: cat(1) };
        let mut last = -1.0;
        for eta in [0.2, 0.4, 0.6, 0.8] {
            let null = NullSpec::single_level(cat(1), eta, third()).unwrap();
            let r = composite_null_test(&s, &null, &st, 50, 20, SeedSpec::new(5)).unwrap();
            assert!(r.null_mean() > last);
            last = r.null_mean();
        }
    }
}
