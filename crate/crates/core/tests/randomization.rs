use ordinal_causal::io::gss_dataset;
use ordinal_causal::model::{reveal, Category, ObservedStudy, OrdinalDistribution, Unit};
use ordinal_causal::randomization::{
    complete_science_table, composite_null_test, fiducial_interval, sharp_null_test, uniform_grid, Budget,
    FiducialSpec, NullSpec, StatisticChoice, StepUpEstimate,
};
use ordinal_causal::rng::SeedSpec;
use proptest::prelude::*;

fn cat(i: u32) -> Category {
    Category::new(i).unwrap()
}

fn reversed(study: &ObservedStudy) -> ObservedStudy {
    let mut units: Vec<Unit> = study.units().to_vec();
    units.reverse();
    ObservedStudy::new(study.k(), units).unwrap()
}

fn small_study() -> ObservedStudy {
    ObservedStudy::from_arm_counts(&[30, 40, 30], &[12, 48, 40]).unwrap()
}

#[test]
fn sharp_p_value_ignores_unit_order() {
    let a = gss_dataset();
    let b = reversed(&a);
    let ra = sharp_null_test(&a, &StatisticChoice::L1, 2_000, SeedSpec::new(5)).unwrap();
    let rb = sharp_null_test(&b, &StatisticChoice::L1, 2_000, SeedSpec::new(5)).unwrap();
    assert_eq!(ra.null_draws, rb.null_draws);
    assert_eq!(ra.p_value, rb.p_value);
}

#[test]
fn composite_p_value_ignores_unit_order() {
    let a = small_study();
    let b = reversed(&a);
    let null = NullSpec::single_level(cat(1), 0.5, OrdinalDistribution::uniform(3)).unwrap();
    let st = StepUpEstimate { level: cat(1) };
    let ra = composite_null_test(&a, &null, &st, 50, 10, SeedSpec::new(6)).unwrap();
    let rb = composite_null_test(&b, &null, &st, 50, 10, SeedSpec::new(6)).unwrap();
    assert_eq!(ra.p_value, rb.p_value);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let study = small_study();
    let mut spec = FiducialSpec::new(cat(1), uniform_grid(0.2, 0.9, 6));
    spec.budget = Budget { tables: 20, permutations: 5 };
    spec.nuisance.draws = 4;
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let sharp = sharp_null_test(&study, &StatisticChoice::Tv, 3_000, SeedSpec::new(1)).unwrap();
            let fid = fiducial_interval(&study, &spec, SeedSpec::new(2)).unwrap();
            (sharp.null_draws, fid.grid.iter().map(|g| g.p_values.clone()).collect::<Vec<_>>(), fid.lower, fid.upper)
        })
    };
    assert_eq!(go(1), go(4));
}

#[test]
fn sharp_test_on_constant_outcome() {
    let study = ObservedStudy::from_arm_counts(&[0, 7, 0], &[0, 5, 0]).unwrap();
    let r = sharp_null_test(&study, &StatisticChoice::L1, 200, SeedSpec::new(3)).unwrap();
    assert_eq!(r.observed, 0.0);
    assert!(r.null_draws.iter().all(|&d| d == 0.0));
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn null_mean_rises_with_eta() {
    let study = small_study();
    let st = StepUpEstimate { level: cat(1) };
    let nu = OrdinalDistribution::new(vec![0.3, 0.4, 0.3]).unwrap();
    let means: Vec<f64> = [0.2, 0.5, 0.8]
        .iter()
        .map(|&eta| {
            let null = NullSpec::single_level(cat(1), eta, nu.clone()).unwrap();
            composite_null_test(&study, &null, &st, 200, 20, SeedSpec::new(9)).unwrap().null_mean()
        })
        .collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn most_plausible_grid_value_lies_inside_the_interval() {
    let study = small_study();
    for level in [1, 2] {
        let mut spec = FiducialSpec::new(cat(level), uniform_grid(0.1, 0.95, 12));
        spec.budget = Budget { tables: 60, permutations: 10 };
        let r = fiducial_interval(&study, &spec, SeedSpec::new(level as u64)).unwrap();
        assert!(r.lower <= r.upper);
        let best = r
            .grid
            .iter()
            .max_by(|a, b| {
                let da = (a.mean_p - 0.5).abs();
                let db = (b.mean_p - 0.5).abs();
                db.total_cmp(&da)
            })
            .unwrap();
        assert!(r.contains(best.eta), "level {level}: {} not in [{}, {}]", best.eta, r.lower, r.upper);
    }
}

fn arb_study() -> impl Strategy<Value = ObservedStudy> {
    (prop::collection::vec((1u32..=4, any::<bool>()), 4..40)).prop_filter_map("both arms", |pairs| {
        ObservedStudy::from_pairs(4, &pairs).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completion_keeps_observed_outcomes(study in arb_study(), eta in 0.01f64..0.99, seed in any::<u64>()) {
        let nu = OrdinalDistribution::new(vec![0.25, 0.3, 0.2, 0.25]).unwrap();
        let null = NullSpec::staircase(vec![eta, eta / 2.0, 0.0], nu).unwrap();
        let table = complete_science_table(&study, &null, SeedSpec::new(seed)).unwrap();
        prop_assert_eq!(reveal(&table, &study.assignment()).unwrap(), study);
        for (a, b) in table.rows() {
            prop_assert!(b.index() == a.index() || b.index() == a.index() + 1);
        }
    }

    #[test]
    fn p_values_are_probabilities(study in arb_study(), seed in any::<u64>()) {
        let r = sharp_null_test(&study, &StatisticChoice::L1, 50, SeedSpec::new(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        prop_assert!(r.corrected_upper_p() >= 1.0 / 51.0);
    }
}
