//! Ordered probit with a covariate: recover the latent coefficients from
//! synthetic data.
//!
//! `cargo run --release --example ordered_probit`

use ordinal_causal::model::{Category, ObservedStudy, Unit};
use ordinal_causal::probit::{fit, ChainSpec, FitConfig, Likelihood, PosteriorEstimand};
use ordinal_causal::rng::SeedSpec;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> ordinal_causal::Result<()> {
    let (beta_x, beta_w) = (0.6, 0.9);
    let cutoffs = [-0.5, 0.4, 1.1];
    let mut rng = SeedSpec::new(11).rng();
    let units = (0..2000)
        .map(|i| {
            let x: f64 = rng.sample(StandardNormal);
            let treated = i % 2 == 0;
            let z = beta_x * x + beta_w * f64::from(u8::from(treated)) + rng.sample::<f64, _>(StandardNormal);
            let slot = cutoffs.iter().filter(|&&c| c < z).count();
            Unit { y: Category::from_slot(slot), treated, x: vec![x] }
        })
        .collect();
    let study = ObservedStudy::new(4, units)?;

    let mut config = FitConfig::new(Likelihood::Probit, 0.5, vec![PosteriorEstimand::TreatmentCoefficient]);
    config.estimands.extend(PosteriorEstimand::conditional_medians(4));
    config.chain = ChainSpec::SHORT;
    let r = fit(&study, &config, SeedSpec::new(12))?;
    let mean = |c: usize| r.beta.iter().map(|b| b[c]).sum::<f64>() / r.beta.len() as f64;
    println!("beta_x {:.3} (truth {beta_x}), beta_w {:.3} (truth {beta_w})", mean(0), mean(1));
    println!("within-chain drift z: {:?}", r.geweke_z);
    for s in &r.summaries {
        println!("{:<16} median {:?} interval {:?}", s.name, s.point, s.interval);
    }
    Ok(())
}
