use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::composite::{CompositeRunner, NullSpec};
use super::statistic::{estimate_q, StepUpEstimate};
use super::{Tail, TestResult};
use crate::error::{invalid, Error, Result};
use crate::model::{Category, ObservedStudy, OrdinalDistribution};
use crate::rng::{SeedSpec, StreamRng};

/// How the nuisance parameters are explored for each grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NuisanceSpec {
    /// Nuisance draws per grid value.
    pub draws: usize,
    /// Smallest allowed coordinate of the `Y(0)` marginal.
    pub floor: f64,
    /// Largest allowed coordinate of the `Y(0)` marginal.
    pub cap: f64,
    /// Draw the step-up probabilities of the other levels uniformly over the
    /// grid range. When false they are zero.
    pub joint_levels: bool,
}

impl Default for NuisanceSpec {
    fn default() -> Self {
        NuisanceSpec { draws: 20, floor: 0.15, cap: 0.6, joint_levels: true }
    }
}

/// Completed tables per null and randomisations per table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub tables: usize,
    pub permutations: usize,
}

impl Budget {
    pub const FULL: Budget = Budget { tables: 1000, permutations: 100 };
    pub const FAST: Budget = Budget { tables: 100, permutations: 20 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialSpec {
    /// Level whose step-up probability is the target.
    pub level: Category,
    /// Strictly increasing values inside `(0, 1)`.
    pub grid: Vec<f64>,
    pub nuisance: NuisanceSpec,
    pub alpha: f64,
    pub budget: Budget,
}

impl FiducialSpec {
    pub fn new(level: Category, grid: Vec<f64>) -> Self {
        FiducialSpec { level, grid, nuisance: NuisanceSpec::default(), alpha: 0.05, budget: Budget::FULL }
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One draw of the nuisance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceDraw {
    pub nu: Vec<f64>,
    /// Step-up probabilities of every level below the top; the target
    /// level's entry is replaced by the grid value.
    pub eta: Vec<f64>,
}

/// Uniform draw on the simplex restricted to `floor <= nu_i <= cap`.
pub fn sample_nuisance(k: usize, floor: f64, cap: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if k == 0 || floor < 0.0 || floor * k as f64 > 1.0 || cap * (k as f64) < 1.0 || floor > cap {
        return Err(Error::Config(format!(
            "no point of the {k}-simplex has every coordinate in [{floor}, {cap}]"
        )));
    }
    for _ in 0..1_000_000 {
        let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = e.iter().sum();
        let nu: Vec<f64> = e.iter().map(|v| v / s).collect();
        if nu.iter().all(|&v| v >= floor && v <= cap) {
            return Ok(nu);
        }
    }
    Err(Error::Config(format!("nuisance region [{floor}, {cap}] too small to sample")))
}

/// p-values at one grid value, one per nuisance draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eta: f64,
    pub p_values: Vec<f64>,
    pub mean_p: f64,
    /// Projection used for the lower endpoint.
    pub max_p: f64,
    /// Projection used for the upper endpoint.
    pub min_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub lower: f64,
    pub upper: f64,
    pub warnings: Vec<String>,
}

/// `lower = sup{eta : p_lower(eta) <= alpha/2}` and
/// `upper = inf{eta : p_upper(eta) >= 1 - alpha/2}` over the grid. A curve
/// that never crosses a threshold yields the grid boundary and a warning.
pub fn invert_p_curve(etas: &[f64], p_lower: &[f64], p_upper: &[f64], alpha: f64) -> Inversion {
    let mut warnings = Vec::new();
    let (first, last) = (etas[0], etas[etas.len() - 1]);
    let lower = match etas.iter().zip(p_lower).rfind(|(_, &p)| p <= alpha / 2.0) {
        Some((&e, _)) => e,
        None => {
            warnings.push(format!("p-value never falls to {} on the grid; lower end set to {first}", alpha / 2.0));
            first
        }
    };
    let upper = match etas.iter().zip(p_upper).find(|(_, &p)| p >= 1.0 - alpha / 2.0) {
        Some((&e, _)) => e,
        None => {
            warnings.push(format!("p-value never reaches {} on the grid; upper end set to {last}", 1.0 - alpha / 2.0));
            last
        }
    };
    if lower > upper {
        warnings.push(format!("p-value curve is not monotone; endpoints {lower} and {upper} swapped"));
        return Inversion { lower: upper, upper: lower, warnings };
    }
    Inversion { lower, upper, warnings }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialResult {
    pub level: Category,
    /// Plug-in estimate of the target from the observed data.
    pub estimate: f64,
    pub grid: Vec<GridPoint>,
    pub nuisance: Vec<NuisanceDraw>,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub budget: Budget,
    pub warnings: Vec<String>,
}

impl FiducialResult {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Interval for the step-up probability at `spec.level` by inverting
/// composite tests over `spec.grid`.
///
/// The p-value at a null is `Pr(T >= t_obs)` for the plug-in estimate `T`,
/// which grows with the grid value. Each grid value is tested against
/// `spec.nuisance.draws` nuisance settings; the largest p-value over them
/// places the lower end and the smallest places the upper end. All grid
/// values share the same nuisance draws and random streams.
pub fn fiducial_interval(study: &ObservedStudy, spec: &FiducialSpec, seed: SeedSpec) -> Result<FiducialResult> {
    let k = study.k();
    let j = spec.level;
    if j.slot() + 1 >= k {
        return Err(invalid(format!("level {j} has no category above it on a {k}-level scale")));
    }
    let grid = &spec.grid;
    if grid.is_empty()
        || grid.iter().any(|&e| !(e > 0.0 && e < 1.0))
        || grid.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::Config("grid must be strictly increasing inside (0, 1)".into()));
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", spec.alpha)));
    }
    if spec.nuisance.draws == 0 || spec.budget.tables == 0 || spec.budget.permutations == 0 {
        return Err(Error::Config("nuisance draws and budgets must be positive".into()));
    }
    let estimate = estimate_q(study, j)?;

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let nuisance_seed = seed.derive(0);
    let nuisance = (0..spec.nuisance.draws)
        .map(|d| {
            let mut rng = nuisance_seed.derive(d as u64).rng();
            let nu = sample_nuisance(k, spec.nuisance.floor, spec.nuisance.cap, &mut rng)?;
            let eta = (0..k - 1)
                .map(|m| if spec.nuisance.joint_levels && m != j.slot() { rng.random_range(lo..=hi) } else { 0.0 })
                .collect();
            Ok(NuisanceDraw { nu, eta })
        })
        .collect::<Result<Vec<_>>>()?;

    let runner = CompositeRunner::new(study);
    let statistic = StepUpEstimate { level: j };
    let observed = runner.observed(&statistic);
    let test_seed = seed.derive(1);
    let jobs: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|g| (0..nuisance.len()).map(move |d| (g, d))).collect();
    let p: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, d)| {
            let mut eta = nuisance[d].eta.clone();
            eta[j.slot()] = grid[g];
            let nu = OrdinalDistribution::new(nuisance[d].nu.clone())?;
            let null = NullSpec::staircase(eta, nu)?;
            let draws = runner.null_draws(
                &null,
                &statistic,
                spec.budget.tables,
                spec.budget.permutations,
                test_seed.derive(d as u64),
            )?;
            let r = TestResult::new(observed, draws, Tail::Upper, spec.budget.permutations, spec.budget.tables);
            Ok(r.p_value)
        })
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<GridPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, &eta)| {
            let p_values = p[g * nuisance.len()..(g + 1) * nuisance.len()].to_vec();
            let mean_p = p_values.iter().sum::<f64>() / p_values.len() as f64;
            let max_p = p_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min_p = p_values.iter().cloned().fold(f64::INFINITY, f64::min);
            GridPoint { eta, p_values, mean_p, max_p, min_p }
        })
        .collect();
    let p_lower: Vec<f64> = points.iter().map(|g| g.max_p).collect();
    let p_upper: Vec<f64> = points.iter().map(|g| g.min_p).collect();
    let inv = invert_p_curve(grid, &p_lower, &p_upper, spec.alpha);
    Ok(FiducialResult {
        level: j,
        estimate,
        grid: points,
        nuisance,
        lower: inv.lower,
        upper: inv.upper,
        alpha: spec.alpha,
        budget: spec.budget,
        warnings: inv.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(0.1, 0.999, 30);
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 0.1);
        assert!((g[29] - 0.999).abs() < 1e-15);
    }

    #[test]
    fn nuisance_respects_bounds() {
        let mut rng = SeedSpec::new(3).rng();
        for _ in 0..200 {
            let nu = sample_nuisance(3, 0.15, 0.6, &mut rng).unwrap();
            assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(nu.iter().all(|&v| (0.15..=0.6).contains(&v)));
        }
        assert!(sample_nuisance(3, 0.4, 0.6, &mut rng).is_err());
        assert!(sample_nuisance(3, 0.0, 0.3, &mut rng).is_err());
    }

    #[test]
    fn inversion_exact_crossing() {
        let etas = [0.1, 0.2, 0.3, 0.4, 0.5];
        let p = [0.0, 0.025, 0.3, 0.975, 1.0];
        let inv = invert_p_curve(&etas, &p, &p, 0.05);
        assert_eq!((inv.lower, inv.upper), (0.2, 0.4));
        assert!(inv.warnings.is_empty());
    }

    #[test]
    fn inversion_without_bracketing() {
        let etas = [0.1, 0.2, 0.3];
        let p = [0.3, 0.5, 0.7];
        let inv = invert_p_curve(&etas, &p, &p, 0.05);
        assert_eq!((inv.lower, inv.upper), (0.1, 0.3));
        assert_eq!(inv.warnings.len(), 2);
    }

    #[test]
    fn small_interval_brackets_estimate() {
        let s = ObservedStudy::from_arm_counts(&[80, 80, 80], &[24, 82, 134]).unwrap();
        let mut spec = FiducialSpec::new(Category::new(1).unwrap(), uniform_grid(0.1, 0.999, 20));
        spec.budget = Budget { tables: 30, permutations: 10 };
        spec.nuisance.draws = 4;
        let r = fiducial_interval(&s, &spec, SeedSpec::new(8)).unwrap();
        assert!((r.estimate - 0.7).abs() < 1e-12);
        assert!(r.contains(0.7), "{} {}", r.lower, r.upper);
        let best = r.grid.iter().max_by(|a, b| a.mean_p.partial_cmp(&b.mean_p).unwrap()).unwrap();
        assert!(r.contains(best.eta) || best.mean_p >= 0.5);
        let again = fiducial_interval(&s, &spec, SeedSpec::new(8)).unwrap();
        assert_eq!(r, again);
    }
}
