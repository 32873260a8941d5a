//! Composite null test on a simulated staircase experiment: treatment moves
//! some units up one level and nobody further.
//!
//! `cargo run --release --example composite_null`

use ordinal_causal::io::{simulate_staircase_study, SimulateConfig};
use ordinal_causal::model::{Category, OrdinalDistribution};
use ordinal_causal::randomization::{composite_null_test, estimate_q, NullSpec, StepUpEstimate};
use ordinal_causal::rng::SeedSpec;

fn main() -> ordinal_causal::Result<()> {
    let (_, study) = simulate_staircase_study(&SimulateConfig::default(), SeedSpec::new(1166))?;
    let nu = OrdinalDistribution::new(vec![0.280, 0.549, 0.171])?;
    let null = NullSpec::staircase(vec![0.487, 0.624], nu)?;
    for level in 1..=2 {
        let j = Category::new(level).unwrap();
        let r = composite_null_test(&study, &null, &StepUpEstimate { level: j }, 1000, 100, SeedSpec::new(level as u64))?;
        println!(
            "q{level}: estimate {:.3}, null mean {:.3}, two-sided p {:.3} (upper {:.3})",
            estimate_q(&study, j)?,
            r.null_mean(),
            r.p_value,
            r.upper_tail_p()
        );
        for (lo, hi, n) in r.histogram(12) {
            println!("  [{lo:.3}, {hi:.3}) {}", "#".repeat(n / 1500));
        }
    }
    Ok(())
}
