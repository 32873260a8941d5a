use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{json, Value};

use super::config::RunConfig;
use super::gss::gss_dataset;
use super::results::{f, histogram_rows, p_curve, OutputDir, ResultsDocument, HISTOGRAM_HEADER};
use super::study_file::{load_study, StudyFile};
use crate::error::{Error, Result};
use crate::estimands::l1_distance;
use crate::model::{
    complete_randomization, empirical_marginals, reveal, simulate_science, Category, ObservedStudy,
    OrdinalDistribution, ScienceTable, StaircaseJoint,
};
use crate::probit::{fit_rhos, frechet_rho, CutoffSharing, FitConfig, FitResult, Likelihood, PosteriorEstimand};
use crate::randomization::{
    composite_null_test, estimate_q, fiducial_interval, sharp_null_test, uniform_grid, FiducialResult, FiducialSpec,
    NullSpec, StepUpEstimate,
};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    TestSharp,
    TestComposite,
    Fiducial,
    FitProbit,
    FitRank,
    Simulate,
    GssDemo,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::TestSharp,
        Subcommand::TestComposite,
        Subcommand::Fiducial,
        Subcommand::FitProbit,
        Subcommand::FitRank,
        Subcommand::Simulate,
        Subcommand::GssDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::TestSharp => "test-sharp",
            Subcommand::TestComposite => "test-composite",
            Subcommand::Fiducial => "fiducial",
            Subcommand::FitProbit => "fit-probit",
            Subcommand::FitRank => "fit-rank",
            Subcommand::Simulate => "simulate",
            Subcommand::GssDemo => "gss-demo",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub results_path: PathBuf,
    pub files: Vec<String>,
    pub results: Value,
    /// Non-fatal problems, such as a p-value curve that never crosses a
    /// threshold on the grid.
    pub warnings: Vec<String>,
}

impl RunOutput {
    /// 0, or 4 when an interval could not be bracketed on its grid.
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            4
        }
    }
}

/// Study simulated from the staircase design in `config.simulate`: science
/// table from stream 1 of `seed`, complete randomisation from stream 2.
pub fn simulate_staircase_study(config: &super::config::SimulateConfig, seed: SeedSpec) -> Result<(ScienceTable, ObservedStudy)> {
    let joint = StaircaseJoint::new(config.c.clone(), config.q.clone())?.expand();
    let table = simulate_science(&joint, config.n, seed.derive(1))?;
    let n_treated = config.n_treated.unwrap_or(config.n / 2);
    let w = complete_randomization(config.n, n_treated, seed.derive(2))?;
    let study = reveal(&table, &w)?;
    Ok((table, study))
}

struct Ctx<'a> {
    config: &'a RunConfig,
    seed: SeedSpec,
    out: OutputDir,
    warnings: Vec<String>,
}

/// Run one subcommand with a resolved configuration, writing the results
/// document and plot-data files to the configured output directory.
pub fn run_subcommand(sub: Subcommand, config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let dir = config.out_dir();
    let mut ctx = Ctx { config, seed: SeedSpec::new(config.seed), out: OutputDir::create(&dir)?, warnings: Vec::new() };
    let results = match sub {
        Subcommand::TestSharp => test_sharp(&mut ctx)?,
        Subcommand::TestComposite => test_composite(&mut ctx)?,
        Subcommand::Fiducial => fiducial(&mut ctx)?,
        Subcommand::FitProbit => fit_cmd(&mut ctx, Likelihood::Probit)?,
        Subcommand::FitRank => fit_cmd(&mut ctx, Likelihood::Rank)?,
        Subcommand::Simulate => simulate(&mut ctx)?,
        Subcommand::GssDemo => gss_demo(&mut ctx)?,
    };
    let doc = ResultsDocument {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: sub.name().to_string(),
        seed: config.seed,
        config: config.clone(),
        results: results.clone(),
        warnings: ctx.warnings.clone(),
        files: Vec::new(),
    };
    let (results_path, files) = ctx.out.finish(doc)?;
    Ok(RunOutput { dir, results_path, files, results, warnings: ctx.warnings })
}

fn labels_of(study: &ObservedStudy) -> Vec<String> {
    match study.labels() {
        Some(l) => l.to_vec(),
        None => (1..=study.k()).map(|i| i.to_string()).collect(),
    }
}

fn observed_study(ctx: &Ctx) -> Result<ObservedStudy> {
    match &ctx.config.data {
        Some(p) => load_study(p),
        None => Ok(gss_dataset()),
    }
}

fn study_for_composite(ctx: &Ctx) -> Result<(ObservedStudy, &'static str)> {
    match &ctx.config.data {
        Some(p) => Ok((load_study(p)?, "file")),
        None => Ok((simulate_staircase_study(&ctx.config.simulate, ctx.seed.derive(1))?.1, "simulated")),
    }
}

fn level(index: u32, k: usize) -> Result<Category> {
    let c = Category::checked(index, k).map_err(|_| Error::Config(format!("level {index} outside 1..{k}")))?;
    if c.slot() + 1 >= k {
        return Err(Error::Config(format!("level {index} has no category above it")));
    }
    Ok(c)
}

fn marginal_bars(ctx: &mut Ctx, study: &ObservedStudy) -> Result<Value> {
    let (p0, p1) = empirical_marginals(study);
    let labels = labels_of(study);
    let rows: Vec<Vec<String>> = (0..study.k())
        .map(|s| vec![(s + 1).to_string(), labels[s].clone(), f(p0.probs()[s]), f(p1.probs()[s])])
        .collect();
    ctx.out.csv("fig1_marginals.csv", &["level", "label", "control", "treated"], rows)?;
    Ok(json!({ "labels": labels, "control": p0.probs(), "treated": p1.probs() }))
}

fn sharp_section(ctx: &mut Ctx, study: &ObservedStudy) -> Result<Value> {
    let cfg = &ctx.config.sharp;
    let r = sharp_null_test(study, &cfg.statistic, cfg.permutations, ctx.seed.derive(2))?;
    let name = match cfg.statistic {
        crate::randomization::StatisticChoice::L1 => "l1".to_string(),
        crate::randomization::StatisticChoice::Tv => "tv".to_string(),
        crate::randomization::StatisticChoice::StepUp(j) => format!("q{j}"),
    };
    ctx.out.csv(&format!("fig2_null_sharp_{name}.csv"), &HISTOGRAM_HEADER, histogram_rows(&r, cfg.bins))?;
    let (lo, hi) = r.null_range();
    Ok(json!({
        "statistic": name,
        "observed": r.observed,
        "p_value": r.p_value,
        "p_value_with_observed": r.corrected_upper_p(),
        "permutations": r.permutations,
        "null_min": lo,
        "null_max": hi,
        "null_mean": r.null_mean(),
    }))
}

fn test_sharp(ctx: &mut Ctx) -> Result<Value> {
    let study = observed_study(ctx)?;
    let bars = marginal_bars(ctx, &study)?;
    let sharp = sharp_section(ctx, &study)?;
    Ok(json!({ "n": study.len(), "marginals": bars, "sharp": sharp }))
}

fn test_composite(ctx: &mut Ctx) -> Result<Value> {
    let (study, source) = study_for_composite(ctx)?;
    let cfg = &ctx.config.composite;
    let k = study.k();
    let nu = match &cfg.nu {
        Some(v) => OrdinalDistribution::from_weights(v)?,
        None => empirical_marginals(&study).0,
    };
    let mut eta = vec![0.0; k - 1];
    let levels = cfg.levels.iter().map(|&l| level(l, k)).collect::<Result<Vec<_>>>()?;
    for (j, &e) in levels.iter().zip(&cfg.eta) {
        eta[j.slot()] = e;
    }
    let null_spec = NullSpec::staircase(eta, nu)?;
    let budget = cfg.budget.expect("resolved config");
    let bins = cfg.bins;
    let mut tests = Vec::new();
    for &j in &levels {
        let st = StepUpEstimate { level: j };
        let r = composite_null_test(&study, &null_spec, &st, budget.tables, budget.permutations, ctx.seed.derive(3).derive(j.index() as u64))?;
        ctx.out.csv(&format!("fig2_null_q{j}.csv"), &HISTOGRAM_HEADER, histogram_rows(&r, bins))?;
        tests.push(json!({
            "level": j,
            "observed": r.observed,
            "p_value": r.p_value,
            "p_upper": r.upper_tail_p(),
            "p_lower": r.lower_tail_p(),
            "null_mean": r.null_mean(),
            "draws": r.null_draws.len(),
        }));
    }
    Ok(json!({
        "data": source,
        "n": study.len(),
        "null": { "eta": null_spec.etas(), "nu": null_spec.nu().probs() },
        "tests": tests,
    }))
}

fn fiducial_runs(ctx: &mut Ctx, study: &ObservedStudy) -> Result<Vec<FiducialResult>> {
    let cfg = &ctx.config.fiducial;
    let grid = uniform_grid(cfg.grid_min, cfg.grid_max, cfg.grid_size);
    let mut out = Vec::new();
    for &l in &cfg.levels {
        let j = level(l, study.k())?;
        let spec = FiducialSpec {
            level: j,
            grid: grid.clone(),
            nuisance: cfg.nuisance.clone(),
            alpha: cfg.alpha,
            budget: cfg.budget.expect("resolved config"),
        };
        let r = fiducial_interval(study, &spec, ctx.seed.derive(4).derive(j.index() as u64))?;
        let (header, rows) = p_curve(&r);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        ctx.out.csv(&format!("fig3_pcurve_q{j}.csv"), &header, rows)?;
        ctx.warnings.extend(r.warnings.iter().map(|w| format!("q{j}: {w}")));
        out.push(r);
    }
    Ok(out)
}

fn fiducial_json(results: &[FiducialResult]) -> Value {
    Value::Array(
        results
            .iter()
            .map(|r| {
                json!({
                    "level": r.level,
                    "estimate": r.estimate,
                    "lower": r.lower,
                    "upper": r.upper,
                    "alpha": r.alpha,
                    "tables": r.budget.tables,
                    "permutations": r.budget.permutations,
                    "warnings": r.warnings,
                })
            })
            .collect(),
    )
}

fn fiducial(ctx: &mut Ctx) -> Result<Value> {
    let (study, source) = study_for_composite(ctx)?;
    let results = fiducial_runs(ctx, &study)?;
    Ok(json!({ "data": source, "n": study.len(), "intervals": fiducial_json(&results) }))
}

fn fit_section(ctx: &mut Ctx, study: &ObservedStudy, likelihood: Likelihood) -> Result<Value> {
    let cfg = &ctx.config.fit;
    let mut estimands = cfg.estimands.clone();
    if estimands.is_empty() {
        estimands = PosteriorEstimand::conditional_medians(study.k());
        if cfg.sharing == CutoffSharing::Shared {
            estimands.push(PosteriorEstimand::TreatmentCoefficient);
        }
    }
    let fc = FitConfig {
        likelihood,
        sharing: cfg.sharing,
        rho: cfg.rhos[0],
        chain: cfg.chain.expect("resolved config"),
        prior_sd: cfg.prior_sd,
        estimands,
    };
    let fits = fit_rhos(study, &fc, &cfg.rhos, ctx.seed.derive(5))?;
    let mode = match likelihood {
        Likelihood::Probit => "probit",
        Likelihood::Rank => "rank",
    };
    let rows: Vec<Vec<String>> = fits
        .iter()
        .flat_map(|r| {
            r.summaries.iter().map(move |s| {
                let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
                vec![
                    f(r.rho),
                    s.name.clone(),
                    opt(s.point),
                    opt(s.interval.map(|i| i.0)),
                    opt(s.interval.map(|i| i.1)),
                    s.undefined.to_string(),
                ]
            })
        })
        .collect();
    ctx.out.csv(&format!("table3_{mode}.csv"), &["rho", "estimand", "median", "lower", "upper", "undefined"], rows)?;
    Ok(json!({
        "likelihood": mode,
        "chain": fc.chain,
        "fits": fits.iter().map(fit_json).collect::<Vec<_>>(),
    }))
}

fn fit_json(r: &FitResult) -> Value {
    json!({
        "rho": r.rho,
        "geweke_z": r.geweke_z,
        "estimands": r.summaries.iter().map(|s| json!({
            "name": s.name,
            "median": s.point,
            "interval": s.interval,
            "mean": s.mean(),
            "sd": s.sd(),
            "undefined": s.undefined,
        })).collect::<Vec<_>>(),
    })
}

fn fit_cmd(ctx: &mut Ctx, likelihood: Likelihood) -> Result<Value> {
    let study = observed_study(ctx)?;
    let fit = fit_section(ctx, &study, likelihood)?;
    Ok(json!({ "n": study.len(), "fit": fit }))
}

fn simulate(ctx: &mut Ctx) -> Result<Value> {
    let (table, study) = simulate_staircase_study(&ctx.config.simulate, ctx.seed.derive(1))?;
    ctx.out.text("study.csv", &StudyFile::from_study(study.clone()).to_text())?;
    let rows: Vec<Vec<String>> = table
        .rows()
        .iter()
        .enumerate()
        .map(|(i, (a, b))| vec![(i + 1).to_string(), a.to_string(), b.to_string()])
        .collect();
    ctx.out.csv("science_table.csv", &["unit_id", "y0", "y1"], rows)?;
    let bars = marginal_bars(ctx, &study)?;
    let estimates = (0..study.k() - 1)
        .map(|s| {
            let j = Category::from_slot(s);
            Ok(json!({ "level": j, "q_hat": estimate_q(&study, j)?, "q_true": ctx.config.simulate.q[s] }))
        })
        .collect::<Result<Vec<_>>>()?;
    let intervals = fiducial_runs(ctx, &study)?;
    Ok(json!({
        "n": study.len(),
        "n_treated": study.n_treated(),
        "marginals": bars,
        "estimates": estimates,
        "intervals": fiducial_json(&intervals),
    }))
}

fn gss_demo(ctx: &mut Ctx) -> Result<Value> {
    let study = observed_study(ctx)?;
    let (p0, p1) = empirical_marginals(&study);
    let bars = marginal_bars(ctx, &study)?;
    let sharp = sharp_section(ctx, &study)?;
    let rho = frechet_rho(&p0, &p1)?;
    let fit = fit_section(ctx, &study, Likelihood::Rank)?;
    Ok(json!({
        "n": study.len(),
        "l1_distance": l1_distance(&p0, &p1)?,
        "frechet_rho": rho,
        "marginals": bars,
        "sharp": sharp,
        "fit": fit,
    }))
}
