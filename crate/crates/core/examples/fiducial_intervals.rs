//! Fiducial-type intervals for the step-up probabilities by inverting
//! composite tests over a grid, with the marginal of `Y(0)` as nuisance.
//!
//! `cargo run --release --example fiducial_intervals`

use ordinal_causal::io::{simulate_staircase_study, SimulateConfig};
use ordinal_causal::model::Category;
use ordinal_causal::randomization::{fiducial_interval, uniform_grid, Budget, FiducialSpec};
use ordinal_causal::rng::SeedSpec;

fn main() -> ordinal_causal::Result<()> {
    let config = SimulateConfig::default();
    let (_, study) = simulate_staircase_study(&config, SeedSpec::new(1166))?;
    for level in 1..=2u32 {
        let mut spec = FiducialSpec::new(Category::new(level).unwrap(), uniform_grid(0.1, 0.999, 30));
        spec.budget = Budget::FAST;
        let r = fiducial_interval(&study, &spec, SeedSpec::new(level as u64))?;
        println!(
            "q{level}: truth {:.3}, estimate {:.3}, 95% interval [{:.3}, {:.3}]",
            config.q[level as usize - 1],
            r.estimate,
            r.lower,
            r.upper
        );
        for w in &r.warnings {
            println!("  warning: {w}");
        }
        for g in r.grid.iter().step_by(5) {
            println!("  eta {:.3}: p mean {:.3}, range [{:.3}, {:.3}]", g.eta, g.mean_p, g.min_p, g.max_p);
        }
    }
    Ok(())
}
