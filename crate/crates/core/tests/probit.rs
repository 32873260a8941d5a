use ordinal_causal::io::gss_dataset;
use ordinal_causal::model::{reveal, ObservedStudy};
use ordinal_causal::probit::{
    fit, fit_rhos, sample_truncated, ChainSpec, CutoffSharing, FitConfig, Likelihood, PosteriorEstimand,
    ProbitModel,
};
use ordinal_causal::rng::SeedSpec;
use proptest::prelude::*;

fn chain(iterations: usize) -> ChainSpec {
    ChainSpec { iterations, burn_in: iterations / 10, thin: 1 }
}

fn beta_w_mean(lik: Likelihood, study: &ObservedStudy) -> f64 {
    let mut c = FitConfig::new(lik, 0.5, vec![PosteriorEstimand::TreatmentCoefficient]);
    c.chain = chain(3_000);
    fit(study, &c, SeedSpec::new(8)).unwrap().summaries[0].mean().unwrap()
}

#[test]
fn probit_and_rank_likelihoods_agree_on_the_treatment_effect() {
    let study = gss_dataset();
    let a = beta_w_mean(Likelihood::Probit, &study);
    let b = beta_w_mean(Likelihood::Rank, &study);
    assert!((a - b).abs() < 0.1, "probit {a}, rank {b}");
    assert!(a > 0.7 && a < 1.2, "{a}");
}

#[test]
fn chains_are_reproducible_and_streams_are_per_rho() {
    let study = gss_dataset();
    let mut c = FitConfig::new(Likelihood::Rank, 0.5, PosteriorEstimand::conditional_medians(5));
    c.chain = chain(400);
    let a = fit(&study, &c, SeedSpec::new(3)).unwrap();
    let b = fit(&study, &c, SeedSpec::new(3)).unwrap();
    assert_eq!(a, b);
    let many = fit_rhos(&study, &c, &[0.1, 0.5], SeedSpec::new(3)).unwrap();
    assert_eq!(many[1], fit(&study, &c, SeedSpec::new(3).derive(1)).unwrap());
}

#[test]
fn per_arm_cutoffs_drop_the_treatment_column() {
    let study = gss_dataset();
    let mut c = FitConfig::new(Likelihood::Probit, 1.0, PosteriorEstimand::conditional_medians(5));
    c.sharing = CutoffSharing::PerArm;
    c.chain = chain(500);
    let r = fit(&study, &c, SeedSpec::new(4)).unwrap();
    assert!(r.beta.iter().all(|b| b.is_empty()));
    let m = r.summary("median[Y1|Y0=2]").unwrap();
    assert!(m.draws.iter().all(|d| d.is_some()));
}

#[test]
fn imputation_keeps_the_observed_coordinate() {
    let study = gss_dataset();
    for lik in [Likelihood::Probit, Likelihood::Rank] {
        let model = ProbitModel::new(&study, lik, CutoffSharing::Shared, 100.0).unwrap();
        let mut state = model.initial_state(0.3).unwrap();
        let mut rng = SeedSpec::new(10).rng();
        for _ in 0..20 {
            model.sweep(&mut state, &mut rng).unwrap();
        }
        assert!(model.latents_consistent(&state));
        let table = model.impute_missing(&state, &mut rng).unwrap();
        assert_eq!(reveal(&table, &study.assignment()).unwrap().units(), study.units());
    }
}

#[test]
fn comonotone_imputation_is_deterministic() {
    let study = gss_dataset();
    let model = ProbitModel::new(&study, Likelihood::Probit, CutoffSharing::Shared, 100.0).unwrap();
    let mut state = model.initial_state(1.0).unwrap();
    let mut rng = SeedSpec::new(12).rng();
    for _ in 0..10 {
        model.sweep(&mut state, &mut rng).unwrap();
    }
    let a = model.impute_missing(&state, &mut SeedSpec::new(1).rng()).unwrap();
    let b = model.impute_missing(&state, &mut SeedSpec::new(2).rng()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn out_of_range_rho_is_rejected() {
    let study = gss_dataset();
    let c = FitConfig::new(Likelihood::Rank, 1.5, vec![]);
    assert_eq!(fit(&study, &c, SeedSpec::new(1)).unwrap_err().exit_code(), 2);
}

proptest! {
    #[test]
    fn truncated_draws_respect_bounds(mean in -20.0f64..20.0, a in -15.0f64..15.0, width in 1e-6f64..30.0, seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed).rng();
        for _ in 0..20 {
            let x = sample_truncated(&mut rng, mean, a, a + width).unwrap();
            prop_assert!(x >= a && x <= a + width, "{x} outside ({a}, {})", a + width);
        }
    }
}

fn synthetic_binary_treatment(n: usize, beta_w: f64, cutoffs: &[f64], seed: SeedSpec) -> ObservedStudy {
    use rand::Rng;
    let mut rng = seed.rng();
    let pairs: Vec<(u32, bool)> = (0..n)
        .map(|i| {
            let treated = i % 2 == 1;
            let z = beta_w * f64::from(u8::from(treated)) + rng.sample::<f64, _>(rand_distr::StandardNormal);
            (1 + cutoffs.iter().filter(|&&c| c < z).count() as u32, treated)
        })
        .collect();
    ObservedStudy::from_pairs(cutoffs.len() + 1, &pairs).unwrap()
}

#[test]
fn treatment_coefficient_recovered_on_three_levels() {
    let study = synthetic_binary_treatment(2_000, 1.0, &[0.0, 1.0], SeedSpec::new(21));
    let mut c = FitConfig::new(Likelihood::Probit, 0.5, vec![PosteriorEstimand::TreatmentCoefficient]);
    c.chain = ChainSpec::SHORT;
    let r = fit(&study, &c, SeedSpec::new(22)).unwrap();
    let s = &r.summaries[0];
    let (mean, sd) = (s.mean().unwrap(), s.sd().unwrap());
    assert!((mean - 1.0).abs() < 3.0 * sd, "mean {mean}, sd {sd}");
    let drift = r.geweke_z[0].unwrap();
    assert!(drift.abs() < 4.0, "within-chain drift {drift}");
}

#[test]
fn marginal_estimand_does_not_depend_on_rho() {
    let study = gss_dataset();
    let mut c = FitConfig::new(Likelihood::Probit, 0.0, vec![PosteriorEstimand::L1Distance]);
    c.chain = chain(4_000);
    let fits = fit_rhos(&study, &c, &[0.0, 1.0], SeedSpec::new(30)).unwrap();
    let stats: Vec<(f64, f64, usize)> = fits
        .iter()
        .map(|f| {
            let s = &f.summaries[0];
            (s.mean().unwrap(), s.sd().unwrap(), s.draws.len())
        })
        .collect();
    let (a, b) = (stats[0], stats[1]);
    // batch-free bound: draws are autocorrelated, so allow a generous multiple
    let se = (a.1 * a.1 / a.2 as f64 + b.1 * b.1 / b.2 as f64).sqrt();
    assert!((a.0 - b.0).abs() < 10.0 * se.max(1e-3), "{a:?} vs {b:?}");
}
