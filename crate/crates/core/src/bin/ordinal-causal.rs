use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ordinal_causal::io::{run_subcommand, Overrides, RunConfig, Subcommand, OUT_DIR_ENV};
use ordinal_causal::Result;

/// Causal inference for ordinal outcomes.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// test-sharp, test-composite, fiducial, fit-probit, fit-rank, simulate or gss-demo.
    subcommand: String,
    /// TOML or JSON run configuration; a previous results.json also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the environment variable and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Short budgets and chains.
    #[arg(long)]
    fast: bool,
    /// Comma-separated latent correlations for the fit subcommands.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Fiducial interval level is 1 - alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Study file replacing the default data.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<i32> {
    let sub: Subcommand = cli.subcommand.parse()?;
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let overrides =
        Overrides { seed: cli.seed, out: cli.out, fast: cli.fast, rhos: cli.rho, alpha: cli.alpha, data: cli.data };
    let env_out = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let config = base.resolve(&overrides, env_out)?;
    let out = run_subcommand(sub, &config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", out.results_path.display());
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
