//! Fisher test of no effect of a parent's degree on the child's degree in
//! the 1994 survey extract.
//!
//! `cargo run --release --example sharp_null_gss`

use ordinal_causal::io::gss_dataset;
use ordinal_causal::model::empirical_marginals;
use ordinal_causal::randomization::{sharp_null_test, StatisticChoice};
use ordinal_causal::rng::SeedSpec;

fn main() -> ordinal_causal::Result<()> {
    let study = gss_dataset();
    let (p0, p1) = empirical_marginals(&study);
    let labels = study.labels().unwrap_or_default();
    for (s, label) in labels.iter().enumerate() {
        println!("{label:>5}  control {:.3}  treated {:.3}", p0.probs()[s], p1.probs()[s]);
    }

    let r = sharp_null_test(&study, &StatisticChoice::L1, 10_000, SeedSpec::new(1))?;
    let (lo, hi) = r.null_range();
    println!("\nobserved L1 distance {:.3}", r.observed);
    println!("null draws in ({lo:.3}, {hi:.3}), mean {:.3}", r.null_mean());
    println!("p-value {} ({:.5} counting the observed assignment)", r.p_value, r.corrected_upper_p());
    Ok(())
}
