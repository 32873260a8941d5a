//! Scale-free estimands of a small joint distribution of potential outcomes.
//!
//! `cargo run --example estimands`

use ordinal_causal::estimands::{evaluate_joint, monotone_binary_joint, Estimand, EstimandValue};
use ordinal_causal::model::{JointDistribution, OrdinalDistribution};

fn main() -> ordinal_causal::Result<()> {
    // rows are Y(0), columns Y(1)
    let joint = JointDistribution::from_rows(&[
        vec![0.10, 0.15, 0.05],
        vec![0.00, 0.25, 0.15],
        vec![0.00, 0.05, 0.25],
    ])?;
    for e in Estimand::ALL {
        let value = evaluate_joint(e, &joint);
        println!("{:<22} {:<12?} {}", e.name(), e.separability(), show(&value));
    }

    let p0 = OrdinalDistribution::new(vec![0.6, 0.4])?;
    let p1 = OrdinalDistribution::new(vec![0.35, 0.65])?;
    let binary = monotone_binary_joint(&p0, &p1)?;
    println!("\nbinary joint under Y(1) >= Y(0): {:?}", binary.entries());
    Ok(())
}

fn show(v: &EstimandValue) -> String {
    match v {
        EstimandValue::Scalar(x) => format!("{x:.4}"),
        other => format!("{other:?}"),
    }
}
