use rayon::prelude::*;

use super::counts::{PairCounts, Rerandomizer};
use super::hypergeometric::LogFactorials;
use super::statistic::ArmStatistic;
use super::{Tail, TestResult};
use crate::error::{invalid, Result};
use crate::model::ObservedStudy;
use crate::rng::SeedSpec;

/// Permutations drawn from one derived stream.
const CHUNK: usize = 512;

/// Fisher randomisation test of `Y(0) = Y(1)` for every unit.
///
/// Under the null the observed outcomes fill the science table, so each
/// re-randomisation only moves units between arms. `n_perm` assignments with
/// the observed arm sizes are drawn and the upper-tail p-value is the fraction
/// of draws at least as large as the observed statistic.
pub fn sharp_null_test(
    study: &ObservedStudy,
    statistic: &dyn ArmStatistic,
    n_perm: usize,
    seed: SeedSpec,
) -> Result<TestResult> {
    if n_perm == 0 {
        return Err(invalid("n_perm must be at least 1"));
    }
    let k = study.k();
    let (control, treated) = study.arm_counts();
    let observed = statistic.evaluate(&control, &treated);
    let pooled: Vec<u64> = control.iter().zip(&treated).map(|(a, b)| a + b).collect();
    let table = PairCounts::diagonal(&pooled);
    let log_fact = LogFactorials::new(study.len());
    let rr = Rerandomizer::new(&table, study.n_treated() as u64, &log_fact);

    let n_chunks = n_perm.div_ceil(CHUNK);
    let draws: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = seed.derive(chunk as u64).rng();
            let len = CHUNK.min(n_perm - chunk * CHUNK);
            let (mut c, mut t) = (vec![0; k], vec![0; k]);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                rr.draw(&mut rng, &mut c, &mut t);
                out.push(statistic.evaluate(&c, &t));
            }
            out
        })
        .collect();
    Ok(TestResult::new(observed, draws, Tail::Upper, n_perm, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimands::Metric;
    use crate::randomization::DistanceStatistic;

    #[test]
    fn constant_outcome_gives_p_one() {
        let s = ObservedStudy::from_arm_counts(&[0, 7, 0], &[0, 5, 0]).unwrap();
        let r = sharp_null_test(&s, &DistanceStatistic(Metric::L1), 200, SeedSpec::new(1)).unwrap();
        assert_eq!(r.observed, 0.0);
        assert!(r.null_draws.iter().all(|&t| t == 0.0));
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_unit_study() {
        let s = ObservedStudy::from_pairs(2, &[(1, false), (2, true)]).unwrap();
        let r = sharp_null_test(&s, &DistanceStatistic(Metric::L1), 50, SeedSpec::new(4)).unwrap();
        assert_eq!(r.observed, 2.0);
        assert!(r.null_draws.iter().all(|&t| t == 2.0));
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn deterministic_and_sized() {
        let s = ObservedStudy::from_arm_counts(&[10, 20, 5], &[3, 9, 12]).unwrap();
        let st = DistanceStatistic(Metric::L1);
        let a = sharp_null_test(&s, &st, 1500, SeedSpec::new(9)).unwrap();
        let b = sharp_null_test(&s, &st, 1500, SeedSpec::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.null_draws.len(), 1500);
        assert!(sharp_null_test(&s, &st, 0, SeedSpec::new(9)).is_err());
    }
}
