use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{check_rho, CutoffSharing, Likelihood, ProbitModel, CUTOFF_PRIOR_SD};
use crate::error::{invalid, Error, Result};
use crate::estimands::{lower_median, mode};
use crate::model::{Category, ObservedStudy};
use crate::rng::SeedSpec;

/// Iterations, burn-in and thinning of one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl ChainSpec {
    /// 50 000 retained draws.
    pub const FULL: ChainSpec = ChainSpec { iterations: 55_000, burn_in: 5_000, thin: 1 };
    /// 5 000 retained draws.
    pub const SHORT: ChainSpec = ChainSpec { iterations: 5_500, burn_in: 500, thin: 1 };

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations || self.thin == 0 {
            return Err(Error::Config(format!(
                "chain needs burn_in < iterations and thin >= 1 (got {} / {} / {})",
                self.iterations, self.burn_in, self.thin
            )));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Quantity recorded at every retained iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PosteriorEstimand {
    /// `median[Y(1) | Y(0) = j]` on the completed science table.
    ConditionalMedian(Category),
    /// `mode[Y(1) | Y(0) = j]` on the completed science table.
    ConditionalMode(Category),
    /// L1 distance between the completed `Y(0)` and `Y(1)` marginals.
    L1Distance,
    /// Coefficient of the treatment indicator on the latent scale.
    TreatmentCoefficient,
}

impl PosteriorEstimand {
    /// `median[Y1|Y0=j]` for every level.
    pub fn conditional_medians(k: usize) -> Vec<PosteriorEstimand> {
        (0..k).map(|s| PosteriorEstimand::ConditionalMedian(Category::from_slot(s))).collect()
    }
}

impl fmt::Display for PosteriorEstimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosteriorEstimand::ConditionalMedian(j) => write!(f, "median[Y1|Y0={j}]"),
            PosteriorEstimand::ConditionalMode(j) => write!(f, "mode[Y1|Y0={j}]"),
            PosteriorEstimand::L1Distance => f.write_str("l1"),
            PosteriorEstimand::TreatmentCoefficient => f.write_str("beta_w"),
        }
    }
}

impl FromStr for PosteriorEstimand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "l1" => return Ok(PosteriorEstimand::L1Distance),
            "beta_w" => return Ok(PosteriorEstimand::TreatmentCoefficient),
            _ => {}
        }
        let conditional = |prefix: &str| -> Option<Result<Category>> {
            let rest = s.strip_prefix(prefix)?.strip_suffix(']')?;
            Some(
                rest.parse::<u32>()
                    .ok()
                    .and_then(Category::new)
                    .ok_or_else(|| Error::Config(format!("bad level in estimand {s:?}"))),
            )
        };
        if let Some(j) = conditional("median[Y1|Y0=") {
            return Ok(PosteriorEstimand::ConditionalMedian(j?));
        }
        if let Some(j) = conditional("mode[Y1|Y0=") {
            return Ok(PosteriorEstimand::ConditionalMode(j?));
        }
        Err(Error::Config(format!(
            "unknown estimand {s:?}; expected median[Y1|Y0=j], mode[Y1|Y0=j], l1 or beta_w"
        )))
    }
}

impl TryFrom<String> for PosteriorEstimand {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PosteriorEstimand> for String {
    fn from(e: PosteriorEstimand) -> String {
        e.to_string()
    }
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub likelihood: Likelihood,
    pub sharing: CutoffSharing,
    pub rho: f64,
    pub chain: ChainSpec,
    pub prior_sd: f64,
    pub estimands: Vec<PosteriorEstimand>,
}

impl FitConfig {
    pub fn new(likelihood: Likelihood, rho: f64, estimands: Vec<PosteriorEstimand>) -> Self {
        FitConfig {
            likelihood,
            sharing: CutoffSharing::Shared,
            rho,
            chain: ChainSpec::FULL,
            prior_sd: CUTOFF_PRIOR_SD,
            estimands,
        }
    }
}

/// Posterior draws of one estimand with their median and central 95% range.
/// Draws where the estimand is undefined (no unit at the conditioning
/// level) are `None` and excluded from the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub name: String,
    pub draws: Vec<Option<f64>>,
    pub undefined: usize,
    pub point: Option<f64>,
    pub interval: Option<(f64, f64)>,
}

impl PosteriorSummary {
    pub fn from_draws(name: impl Into<String>, draws: Vec<Option<f64>>) -> Self {
        let mut v: Vec<f64> = draws.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        let undefined = draws.len() - v.len();
        let (point, interval) = if v.is_empty() {
            (None, None)
        } else {
            (Some(quantile(&v, 0.5)), Some((quantile(&v, 0.025), quantile(&v, 0.975))))
        };
        PosteriorSummary { name: name.into(), draws, undefined, point, interval }
    }

    /// Interval collapses to the point.
    pub fn is_point(&self) -> bool {
        matches!(self.interval, Some((a, b)) if a == b)
    }

    pub fn mean(&self) -> Option<f64> {
        let v: Vec<f64> = self.draws.iter().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn sd(&self) -> Option<f64> {
        let v: Vec<f64> = self.draws.iter().flatten().copied().collect();
        if v.len() < 2 {
            return None;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
    }
}

/// Smallest sorted value whose empirical CDF reaches `p`.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Within-chain convergence check for one scalar: the mean of the first 10%
/// of retained draws against the last 50%, standardised with batch-means
/// variances.
pub fn geweke_z(draws: &[f64]) -> Option<f64> {
    let n = draws.len();
    if n < 100 {
        return None;
    }
    let a = &draws[..n / 10];
    let b = &draws[n / 2..];
    let (ma, va) = batch_mean_var(a);
    let (mb, vb) = batch_mean_var(b);
    let se = (va + vb).sqrt();
    (se > 0.0).then(|| (ma - mb) / se)
}

/// Mean and estimated variance of the mean via non-overlapping batches.
fn batch_mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let batches = 10.max((n as f64).sqrt() as usize).min(n);
    let size = n / batches;
    let mean = x.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..batches).map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let var_b = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, var_b / batches as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rho: f64,
    pub summaries: Vec<PosteriorSummary>,
    /// Retained `beta` draws.
    pub beta: Vec<Vec<f64>>,
    /// Within-chain z-score per `beta` coordinate.
    pub geweke_z: Vec<Option<f64>>,
}

impl FitResult {
    pub fn summary(&self, name: &str) -> Option<&PosteriorSummary> {
        self.summaries.iter().find(|s| s.name == name)
    }
}

fn evaluate(
    estimand: PosteriorEstimand,
    k: usize,
    counts: &[u64],
    beta: &[f64],
    treatment_col: Option<usize>,
) -> Option<f64> {
    let row = |j: Category| -> Vec<f64> { counts[j.slot() * k..(j.slot() + 1) * k].iter().map(|&c| c as f64).collect() };
    match estimand {
        PosteriorEstimand::ConditionalMedian(j) => lower_median(&row(j)).map(|c| c.index() as f64),
        PosteriorEstimand::ConditionalMode(j) => mode(&row(j)).map(|c| c.index() as f64),
        PosteriorEstimand::L1Distance => {
            let n = counts.iter().sum::<u64>() as f64;
            Some(
                (0..k)
                    .map(|s| {
                        let y0: u64 = counts[s * k..(s + 1) * k].iter().sum();
                        let y1: u64 = (0..k).map(|r| counts[r * k + s]).sum();
                        (y1 as f64 - y0 as f64).abs() / n
                    })
                    .sum(),
            )
        }
        PosteriorEstimand::TreatmentCoefficient => treatment_col.map(|c| beta[c]),
    }
}

/// Run one Gibbs chain and summarise the requested estimands of the
/// posterior-predictive science tables.
pub fn fit(study: &ObservedStudy, config: &FitConfig, seed: SeedSpec) -> Result<FitResult> {
    config.chain.validate()?;
    check_rho(config.rho)?;
    for e in &config.estimands {
        if let PosteriorEstimand::ConditionalMedian(j) | PosteriorEstimand::ConditionalMode(j) = e {
            if j.slot() >= study.k() {
                return Err(invalid(format!("estimand {e} refers to a level outside 1..{}", study.k())));
            }
        }
    }
    let model = ProbitModel::new(study, config.likelihood, config.sharing, config.prior_sd)?;
    let k = model.k();
    let mut state = model.initial_state(config.rho)?;
    let mut rng = seed.rng();
    let retained = config.chain.retained();
    let mut draws: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(retained); config.estimands.len()];
    let mut beta = Vec::with_capacity(retained);
    let mut counts = vec![0u64; k * k];
    for it in 0..config.chain.iterations {
        model.sweep(&mut state, &mut rng)?;
        if it < config.chain.burn_in || (it - config.chain.burn_in) % config.chain.thin != 0 {
            continue;
        }
        if state.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerical(format!("non-finite coefficient at iteration {it}")));
        }
        model.impute_counts(&state, &mut rng, &mut counts);
        for (e, out) in config.estimands.iter().zip(draws.iter_mut()) {
            out.push(evaluate(*e, k, &counts, &state.beta, model.treatment_col()));
        }
        beta.push(state.beta.clone());
    }
    let summaries = config
        .estimands
        .iter()
        .zip(draws)
        .map(|(e, d)| PosteriorSummary::from_draws(e.to_string(), d))
        .collect();
    let geweke = (0..model.design().p())
        .map(|c| geweke_z(&beta.iter().map(|b| b[c]).collect::<Vec<_>>()))
        .collect();
    Ok(FitResult { rho: config.rho, summaries, beta, geweke_z: geweke })
}

/// [`fit`] at several values of `rho`, one chain each, run in parallel.
/// Chain `i` uses `seed.derive(i)`.
pub fn fit_rhos(study: &ObservedStudy, config: &FitConfig, rhos: &[f64], seed: SeedSpec) -> Result<Vec<FitResult>> {
    rhos.par_iter()
        .enumerate()
        .map(|(i, &rho)| {
            let mut c = config.clone();
            c.rho = rho;
            fit(study, &c, seed.derive(i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimand_names_round_trip() {
        for e in [
            PosteriorEstimand::ConditionalMedian(Category::new(2).unwrap()),
            PosteriorEstimand::ConditionalMode(Category::new(5).unwrap()),
            PosteriorEstimand::L1Distance,
            PosteriorEstimand::TreatmentCoefficient,
        ] {
            assert_eq!(e.to_string().parse::<PosteriorEstimand>().unwrap(), e);
        }
        assert!("median[Y1|Y0=0]".parse::<PosteriorEstimand>().is_err());
        assert!("mean".parse::<PosteriorEstimand>().is_err());
    }

    #[test]
    fn summary_quantiles() {
        let draws: Vec<Option<f64>> = (0..100).map(|i| Some(if i < 3 { 3.0 } else if i < 60 { 4.0 } else { 5.0 })).collect();
        let s = PosteriorSummary::from_draws("x", draws);
        assert_eq!(s.point, Some(4.0));
        assert_eq!(s.interval, Some((3.0, 5.0)));
        let s = PosteriorSummary::from_draws("y", vec![Some(2.0), None, Some(2.0)]);
        assert_eq!(s.undefined, 1);
        assert!(s.is_point());
        let s = PosteriorSummary::from_draws("z", vec![None]);
        assert_eq!(s.point, None);
    }

    #[test]
    fn chain_validation() {
        assert!(ChainSpec { iterations: 10, burn_in: 10, thin: 1 }.validate().is_err());
        assert!(ChainSpec { iterations: 10, burn_in: 1, thin: 0 }.validate().is_err());
        assert_eq!(ChainSpec::FULL.retained(), 50_000);
        assert_eq!(ChainSpec { iterations: 10, burn_in: 1, thin: 2 }.retained(), 5);
    }

    #[test]
    fn geweke_on_white_noise() {
        let mut rng = SeedSpec::new(1).rng();
        let x: Vec<f64> = (0..5000).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        assert!(geweke_z(&x).unwrap().abs() < 4.0);
        let trend: Vec<f64> = (0..5000).map(|i| i as f64).collect();
        assert!(geweke_z(&trend).unwrap().abs() > 4.0);
    }

    #[test]
    fn small_fit_is_reproducible() {
        let s = ObservedStudy::from_arm_counts(&[10, 20, 5], &[3, 10, 15]).unwrap();
        let mut c = FitConfig::new(Likelihood::Rank, 0.5, PosteriorEstimand::conditional_medians(3));
        c.chain = ChainSpec { iterations: 300, burn_in: 100, thin: 2 };
        let a = fit(&s, &c, SeedSpec::new(3)).unwrap();
        let b = fit(&s, &c, SeedSpec::new(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.beta.len(), 100);
        assert_eq!(a.summaries.len(), 3);
    }
}
