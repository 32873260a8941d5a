//! Rank-likelihood fit of the survey extract over a range of latent
//! correlations, summarising `median[Y(1) | Y(0) = j]`.
//!
//! `cargo run --release --example gss_rank_likelihood`

use ordinal_causal::io::gss_dataset;
use ordinal_causal::probit::{fit_rhos, ChainSpec, FitConfig, Likelihood, PosteriorEstimand};
use ordinal_causal::rng::SeedSpec;

fn main() -> ordinal_causal::Result<()> {
    let study = gss_dataset();
    let mut estimands = PosteriorEstimand::conditional_medians(study.k());
    estimands.push(PosteriorEstimand::TreatmentCoefficient);
    let mut config = FitConfig::new(Likelihood::Rank, 0.5, estimands);
    config.chain = ChainSpec::SHORT;
    let fits = fit_rhos(&study, &config, &[0.25, 0.5, 0.783, 1.0], SeedSpec::new(2019))?;

    print!("{:>6}", "rho");
    for s in &fits[0].summaries {
        print!("  {:>16}", s.name);
    }
    println!();
    for f in &fits {
        print!("{:>6}", f.rho);
        for s in &f.summaries {
            let cell = match (s.point, s.interval) {
                (Some(p), Some((lo, hi))) if s.name == "beta_w" => format!("{p:.2} [{lo:.2},{hi:.2}]"),
                (Some(p), Some((lo, hi))) => format!("{p} [{lo},{hi}]"),
                _ => "-".into(),
            };
            print!("  {cell:>16}");
        }
        println!();
    }
    Ok(())
}
