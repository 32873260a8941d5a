use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probit::{ChainSpec, CutoffSharing, PosteriorEstimand, CUTOFF_PRIOR_SD};
use crate::randomization::{Budget, NuisanceSpec, StatisticChoice};

/// Environment variable that overrides the output directory of a config
/// file (but not `--out`).
pub const OUT_DIR_ENV: &str = "ORDINAL_CAUSAL_OUT";

pub const DEFAULT_OUT_DIR: &str = "ordinal-causal-out";

fn default_seed() -> u64 {
    20_190_607
}

/// Everything a run needs. Sections not used by a subcommand are ignored.
/// Missing fields take their defaults; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Use the short budgets and chains wherever they are not set
    /// explicitly.
    pub fast: bool,
    /// Study file. Without one, `test-sharp`, `fit-*` and `gss-demo` use the
    /// embedded survey extract and `test-composite` / `fiducial` use a study
    /// simulated from the `simulate` section.
    pub data: Option<PathBuf>,
    pub sharp: SharpConfig,
    pub composite: CompositeConfig,
    pub fiducial: FiducialConfig,
    pub fit: FitSection,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            out: None,
            fast: false,
            data: None,
            sharp: SharpConfig::default(),
            composite: CompositeConfig::default(),
            fiducial: FiducialConfig::default(),
            fit: FitSection::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SharpConfig {
    pub statistic: StatisticChoice,
    pub permutations: usize,
    /// Histogram bins in the null-distribution sidecar.
    pub bins: usize,
}

impl Default for SharpConfig {
    fn default() -> Self {
        SharpConfig { statistic: StatisticChoice::L1, permutations: 10_000, bins: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositeConfig {
    /// Levels tested, each with its own step-up probability in `eta`.
    pub levels: Vec<u32>,
    pub eta: Vec<f64>,
    /// `Y(0)` marginal of the null; the control arm's empirical
    /// distribution when absent.
    pub nu: Option<Vec<f64>>,
    pub budget: Option<Budget>,
    pub bins: usize,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            levels: vec![1, 2],
            eta: vec![0.487, 0.624],
            nu: Some(vec![0.280, 0.549, 0.171]),
            budget: None,
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiducialConfig {
    pub levels: Vec<u32>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_size: usize,
    pub nuisance: NuisanceSpec,
    pub alpha: f64,
    pub budget: Option<Budget>,
}

impl Default for FiducialConfig {
    fn default() -> Self {
        FiducialConfig {
            levels: vec![1, 2],
            grid_min: 0.1,
            grid_max: 0.999,
            grid_size: 30,
            nuisance: NuisanceSpec::default(),
            alpha: 0.05,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub rhos: Vec<f64>,
    pub sharing: CutoffSharing,
    pub chain: Option<ChainSpec>,
    pub prior_sd: f64,
    /// Defaults to `median[Y1|Y0=j]` for every level plus `beta_w`.
    pub estimands: Vec<PosteriorEstimand>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            rhos: vec![0.25, 0.5, 0.783, 1.0],
            sharing: CutoffSharing::Shared,
            chain: None,
            prior_sd: CUTOFF_PRIOR_SD,
            estimands: Vec::new(),
        }
    }
}

/// Staircase design: `Y(0) ~ c`, a unit at level `i < k` moves up one level
/// under treatment with probability `q[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub n: usize,
    /// Defaults to half the units.
    pub n_treated: Option<usize>,
    pub c: Vec<f64>,
    pub q: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { n: 500, n_treated: None, c: vec![1.0 / 3.0; 3], q: vec![0.7, 2.0 / 3.0] }
    }
}

/// Command-line values that take precedence over the config document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub fast: bool,
    pub rhos: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub data: Option<PathBuf>,
}

impl RunConfig {
    /// Read TOML or JSON by extension. A results document from an earlier
    /// run is accepted too: its embedded config is used.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        if is_json {
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if value.get("results").is_some() {
                if let Some(c) = value.get_mut("config") {
                    value = c.take();
                }
            }
            serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// Apply command-line overrides, then the environment override for the
    /// output directory, then fill every optional budget and chain so the
    /// result describes the run completely.
    pub fn resolve(mut self, overrides: &Overrides, env_out: Option<PathBuf>) -> Result<Self> {
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
        if overrides.fast {
            self.fast = true;
        }
        if let Some(r) = &overrides.rhos {
            self.fit.rhos = r.clone();
        }
        if let Some(a) = overrides.alpha {
            self.fiducial.alpha = a;
        }
        if let Some(d) = &overrides.data {
            self.data = Some(d.clone());
        }
        self.out = overrides.out.clone().or(env_out).or(self.out).or_else(|| Some(PathBuf::from(DEFAULT_OUT_DIR)));
        let budget = if self.fast { Budget::FAST } else { Budget::FULL };
        self.composite.budget.get_or_insert(budget);
        self.fiducial.budget.get_or_insert(budget);
        self.fit.chain.get_or_insert(if self.fast { ChainSpec::SHORT } else { ChainSpec::FULL });
        self.validate()?;
        Ok(self)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.sharp.permutations == 0 {
            return bad("sharp.permutations must be at least 1".into());
        }
        if self.sharp.bins == 0 || self.composite.bins == 0 {
            return bad("histogram bins must be at least 1".into());
        }
        let c = &self.composite;
        if c.levels.is_empty() || c.levels.len() != c.eta.len() {
            return bad("composite.levels and composite.eta must be nonempty and of equal length".into());
        }
        if c.levels.contains(&0) {
            return bad("levels are numbered from 1".into());
        }
        if c.eta.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("composite.eta values must lie strictly inside (0, 1)".into());
        }
        if let Some(nu) = &c.nu {
            if nu.iter().any(|&v| !(v >= 0.0)) || (nu.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                return bad("composite.nu must be a probability vector".into());
            }
        }
        for b in [c.budget, self.fiducial.budget].into_iter().flatten() {
            if b.tables == 0 || b.permutations == 0 {
                return bad("budgets must be positive".into());
            }
        }
        let f = &self.fiducial;
        if f.levels.is_empty() || f.levels.contains(&0) {
            return bad("fiducial.levels must list levels numbered from 1".into());
        }
        if !(0.0 < f.grid_min && f.grid_min < f.grid_max && f.grid_max < 1.0) || f.grid_size < 2 {
            return bad("fiducial grid needs 0 < grid_min < grid_max < 1 and at least 2 points".into());
        }
        if !(f.alpha > 0.0 && f.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", f.alpha));
        }
        if f.nuisance.draws == 0 || !(0.0..=1.0).contains(&f.nuisance.floor) || f.nuisance.cap <= f.nuisance.floor {
            return bad("fiducial.nuisance needs draws >= 1 and 0 <= floor < cap".into());
        }
        let fit = &self.fit;
        if fit.rhos.is_empty() || fit.rhos.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("fit.rhos must be a nonempty list of values in [0, 1]".into());
        }
        if !(fit.prior_sd > 0.0) {
            return bad("fit.prior_sd must be positive".into());
        }
        if let Some(ch) = fit.chain {
            ch.validate()?;
        }
        let s = &self.simulate;
        if s.c.len() < 2 || s.q.len() + 1 != s.c.len() {
            return bad("simulate.c needs k >= 2 entries and simulate.q exactly k - 1".into());
        }
        if s.n < 2 || s.n_treated.is_some_and(|t| t == 0 || t >= s.n) {
            return bad("simulate needs n >= 2 and 0 < n_treated < n".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_defaults() {
        let c: RunConfig = toml::from_str("seed = 5\n[sharp]\nstatistic = \"tv\"\n").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.sharp.statistic, StatisticChoice::Tv);
        assert_eq!(c.sharp.permutations, 10_000);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 5\n").is_err());
        assert!(toml::from_str::<RunConfig>("[fit]\nrho = [0.5]\n").is_err());
    }

    #[test]
    fn precedence_of_output_directory() {
        let c = RunConfig { out: Some("from-config".into()), ..Default::default() };
        let flag = Overrides { out: Some("from-flag".into()), ..Default::default() };
        let r = c.clone().resolve(&flag, Some("from-env".into())).unwrap();
        assert_eq!(r.out_dir(), PathBuf::from("from-flag"));
        let r = c.clone().resolve(&Overrides::default(), Some("from-env".into())).unwrap();
        assert_eq!(r.out_dir(), PathBuf::from("from-env"));
        let r = c.resolve(&Overrides::default(), None).unwrap();
        assert_eq!(r.out_dir(), PathBuf::from("from-config"));
        let r = RunConfig::default().resolve(&Overrides::default(), None).unwrap();
        assert_eq!(r.out_dir(), PathBuf::from(DEFAULT_OUT_DIR));
    }

    #[test]
    fn resolution_fills_budgets() {
        let r = RunConfig::default().resolve(&Overrides { fast: true, ..Default::default() }, None).unwrap();
        assert_eq!(r.fiducial.budget, Some(Budget::FAST));
        assert_eq!(r.fit.chain, Some(ChainSpec::SHORT));
        let again = r.clone().resolve(&Overrides::default(), None).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn invalid_values() {
        let o = Overrides { alpha: Some(1.5), ..Default::default() };
        assert!(matches!(RunConfig::default().resolve(&o, None), Err(Error::Config(_))));
        let o = Overrides { rhos: Some(vec![0.5, 1.2]), ..Default::default() };
        assert!(RunConfig::default().resolve(&o, None).is_err());
    }
}
