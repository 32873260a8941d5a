//! Upper bound on the correlation of two ordinal scores with given marginals,
//! a default for the unidentified latent correlation.
//!
//! `cargo run --example frechet_rho`

use ordinal_causal::io::gss_dataset;
use ordinal_causal::model::{empirical_marginals, OrdinalDistribution};
use ordinal_causal::probit::frechet_rho;

fn main() -> ordinal_causal::Result<()> {
    let (p0, p1) = empirical_marginals(&gss_dataset());
    println!("survey extract: {:.4}", frechet_rho(&p0, &p1)?);

    let base = OrdinalDistribution::new(vec![0.2, 0.3, 0.3, 0.2])?;
    for shift in [0.0, 0.1, 0.2, 0.3] {
        let moved = OrdinalDistribution::new(vec![0.2 - shift / 2.0, 0.3 - shift / 2.0, 0.3, 0.2 + shift])?;
        println!("shift {shift:.1}: {:.4}", frechet_rho(&base, &moved)?);
    }
    Ok(())
}
