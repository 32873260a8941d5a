//! Write, read and run a study file from a temporary directory, the same way
//! the command-line tool does.
//!
//! `cargo run --example study_files`

use ordinal_causal::io::{load_study_file, run_subcommand, save_study, RunConfig, StudyFile, Subcommand};
use ordinal_causal::model::ObservedStudy;

fn main() -> ordinal_causal::Result<()> {
    let dir = std::env::temp_dir().join("ordinal-causal-example");
    std::fs::create_dir_all(&dir)?;

    let study = ObservedStudy::from_arm_counts(&[14, 22, 9], &[6, 20, 19])?
        .with_labels(vec!["poor".into(), "fair".into(), "good".into()])?;
    let path = dir.join("study.csv");
    save_study(&path, &StudyFile::from_study(study))?;
    let text = std::fs::read_to_string(&path)?;
    println!("{}", text.lines().take(6).collect::<Vec<_>>().join("\n"));
    println!("... {} units\n", load_study_file(&path)?.study.len());

    let mut config = RunConfig { data: Some(path), out: Some(dir.join("out")), ..RunConfig::default() };
    config.sharp.permutations = 2000;
    let out = run_subcommand(Subcommand::TestSharp, &config)?;
    println!("results in {}", out.results_path.display());
    for f in &out.files {
        println!("  {f}");
    }
    println!("p-value {}", out.results["sharp"]["p_value"]);
    Ok(())
}
