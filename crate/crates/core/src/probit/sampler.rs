use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cutoffs::CutoffMap;
use super::design::Design;
use super::normal::{norm_cdf, norm_quantile, norm_sf};
use super::truncnorm::sample_truncated;
use crate::error::{invalid, Error, Result};
use crate::model::{Category, ObservedStudy, ScienceTable};

/// How observed categories constrain the latent variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Likelihood {
    /// Explicit cutoffs with a normal prior.
    Probit,
    /// Only the ordering of the categories is used.
    Rank,
}

/// Whether both arms use the same latent-to-category map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffSharing {
    /// One map; treatment enters the linear predictor.
    Shared,
    /// One map per arm; the linear predictor holds covariates only and the
    /// treatment effect lives in the difference between the maps.
    PerArm,
}

/// Default prior standard deviation of every cutoff.
pub const CUTOFF_PRIOR_SD: f64 = 100.0;

/// Proposal scale of the joint cutoff move. Each cutoff's step is this
/// divided by the square root of the number of units in the two categories
/// it separates.
pub const CUTOFF_MH_SCALE: f64 = 0.8;

/// `ln Pr(a < N(0, 1) <= b)` without cancellation in either tail.
fn ln_interval_prob(a: f64, b: f64) -> f64 {
    let p = if a > 0.0 { norm_sf(a) - norm_sf(b) } else { norm_cdf(b) - norm_cdf(a) };
    p.max(f64::MIN_POSITIVE).ln()
}

/// Current values of the Gibbs sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbitState {
    pub beta: Vec<f64>,
    pub z: Vec<f64>,
    /// One map, or control then treated under [`CutoffSharing::PerArm`].
    /// Under the rank likelihood these are derived from the latents.
    pub cutoffs: Vec<CutoffMap>,
    pub rho: f64,
    pub iteration: u64,
}

/// Observed data arranged for the sampler.
#[derive(Debug, Clone)]
pub struct ProbitModel {
    k: usize,
    likelihood: Likelihood,
    sharing: CutoffSharing,
    prior_sd: f64,
    y: Vec<usize>,
    treated: Vec<bool>,
    design: Design,
    treatment_col: Option<usize>,
    /// `members[group][slot]`: units of a cutoff group in a category.
    members: Vec<Vec<Vec<usize>>>,
}

impl ProbitModel {
    /// Design columns are the covariates followed, under shared cutoffs, by
    /// the treatment indicator. There is no intercept: the cutoffs carry the
    /// location.
    pub fn new(study: &ObservedStudy, likelihood: Likelihood, sharing: CutoffSharing, prior_sd: f64) -> Result<Self> {
        if !(prior_sd > 0.0) {
            return Err(invalid("cutoff prior standard deviation must be positive"));
        }
        let n = study.len();
        let d = study.covariate_dim();
        let with_w = sharing == CutoffSharing::Shared;
        let p = d + with_w as usize;
        let mut x = Vec::with_capacity(n * p);
        for u in study.units() {
            x.extend_from_slice(&u.x);
            if with_w {
                x.push(if u.treated { 1.0 } else { 0.0 });
            }
        }
        let design = Design::new(n, p, x)?;
        let mut model = ProbitModel {
            k: study.k(),
            likelihood,
            sharing,
            prior_sd,
            y: Vec::new(),
            treated: study.units().iter().map(|u| u.treated).collect(),
            design,
            treatment_col: with_w.then_some(d),
            members: Vec::new(),
        };
        let slots: Vec<usize> = study.units().iter().map(|u| u.y.slot()).collect();
        model.set_outcomes(&slots)?;
        Ok(model)
    }

    /// Replace the observed categories, keeping assignment and covariates.
    pub fn set_outcomes(&mut self, slots: &[usize]) -> Result<()> {
        if slots.len() != self.treated.len() {
            return Err(Error::LengthMismatch { expected: self.treated.len(), got: slots.len() });
        }
        if let Some(&bad) = slots.iter().find(|&&s| s >= self.k) {
            return Err(invalid(format!("category slot {bad} outside a {}-level scale", self.k)));
        }
        let groups = self.groups();
        let mut members = vec![vec![Vec::new(); self.k]; groups];
        for (i, &s) in slots.iter().enumerate() {
            members[self.group(i)][s].push(i);
        }
        self.members = members;
        self.y = slots.to_vec();
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn likelihood(&self) -> Likelihood {
        self.likelihood
    }

    pub fn sharing(&self) -> CutoffSharing {
        self.sharing
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.y
    }

    pub fn treated(&self) -> &[bool] {
        &self.treated
    }

    /// Index of the treatment coefficient in `beta`, if present.
    pub fn treatment_col(&self) -> Option<usize> {
        self.treatment_col
    }

    fn groups(&self) -> usize {
        match self.sharing {
            CutoffSharing::Shared => 1,
            CutoffSharing::PerArm => 2,
        }
    }

    fn group(&self, i: usize) -> usize {
        self.arm_group(self.treated[i])
    }

    fn arm_group(&self, treated: bool) -> usize {
        match self.sharing {
            CutoffSharing::Shared => 0,
            CutoffSharing::PerArm => treated as usize,
        }
    }

    /// `beta = 0`, latents at the normal scores of their category's midrank
    /// within the cutoff group, cutoffs at the normal quantiles of the
    /// group's empirical distribution function.
    pub fn initial_state(&self, rho: f64) -> Result<ProbitState> {
        check_rho(rho)?;
        let mut z = vec![0.0; self.n()];
        let mut cutoffs = Vec::with_capacity(self.groups());
        for members in &self.members {
            let total: usize = members.iter().map(Vec::len).sum();
            let mut below = 0usize;
            let mut s = Vec::with_capacity(self.k - 1);
            for (slot, units) in members.iter().enumerate() {
                let upto = below + units.len();
                if !units.is_empty() {
                    let mid = (below + upto) as f64 / (2.0 * total as f64);
                    let score = norm_quantile(mid);
                    for &i in units {
                        z[i] = score;
                    }
                }
                if slot + 1 < self.k {
                    let f = (upto as f64 / total as f64).clamp(1e-12, 1.0 - 1e-12);
                    let mut c = norm_quantile(f);
                    if let Some(&prev) = s.last() {
                        if c <= prev {
                            c = prev + 1e-6;
                        }
                    }
                    s.push(c);
                }
                below = upto;
            }
            cutoffs.push(CutoffMap::new(s)?);
        }
        let mut state = ProbitState { beta: vec![0.0; self.design.p()], z, cutoffs, rho, iteration: 0 };
        if self.likelihood == Likelihood::Rank {
            self.refresh_rank_cutoffs(&mut state);
        }
        Ok(state)
    }

    /// Draw `beta | z` from its conjugate normal full conditional.
    pub fn gibbs_beta_update<R: Rng + ?Sized>(&self, state: &ProbitState, rng: &mut R) -> Vec<f64> {
        self.design.draw_beta(rng, &state.z)
    }

    /// Draw `z_i` from `N(x_i' beta, 1)` restricted to its category's interval.
    pub fn gibbs_z_update_probit<R: Rng + ?Sized>(&self, state: &ProbitState, i: usize, rng: &mut R) -> Result<f64> {
        let (lo, hi) = state.cutoffs[self.group(i)].bounds(self.y[i]);
        self.truncated(rng, state, i, lo, hi)
    }

    /// Draw `z_i` from `N(x_i' beta, 1)` restricted to lie above every latent
    /// of a lower category and below every latent of a higher one.
    pub fn gibbs_z_update_rank<R: Rng + ?Sized>(&self, state: &ProbitState, i: usize, rng: &mut R) -> Result<f64> {
        let g = self.group(i);
        let yi = self.y[i];
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (slot, units) in self.members[g].iter().enumerate() {
            if slot < yi {
                lo = units.iter().fold(lo, |m, &u| m.max(state.z[u]));
            } else if slot > yi {
                hi = units.iter().fold(hi, |m, &u| m.min(state.z[u]));
            }
        }
        self.truncated(rng, state, i, lo, hi)
    }

    fn truncated<R: Rng + ?Sized>(&self, rng: &mut R, state: &ProbitState, i: usize, lo: f64, hi: f64) -> Result<f64> {
        let mean = self.design.linear(i, &state.beta);
        sample_truncated(rng, mean, lo, hi).ok_or(Error::EmptyInterval { unit: i, lower: lo, upper: hi })
    }

    /// Draw the cutoff between zero-based slots `j` and `j + 1` of cutoff
    /// group `group` from its `N(0, prior_sd^2)` prior restricted to lie
    /// above the latents of category `j` and below those of `j + 1`. An empty
    /// side falls back to the neighbouring cutoff.
    pub fn gibbs_cutoff_update<R: Rng + ?Sized>(
        &self,
        state: &ProbitState,
        group: usize,
        j: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let map = &state.cutoffs[group];
        let s = map.interior();
        let units = &self.members[group];
        let lower_cut = if j == 0 { f64::NEG_INFINITY } else { s[j - 1] };
        let upper_cut = s.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let lo = units[j].iter().fold(lower_cut, |m, &u| m.max(state.z[u]));
        let hi = units[j + 1].iter().fold(upper_cut, |m, &u| m.min(state.z[u]));
        let sd = self.prior_sd;
        let draw = sample_truncated(rng, 0.0, lo / sd, hi / sd)
            .ok_or(Error::Numerical(format!("cutoff {} has inverted bounds ({lo}, {hi})", j + 1)))?;
        Ok((draw * sd).clamp(lo, hi))
    }

    /// Metropolis-Hastings move of every cutoff of `group` at once with the
    /// latents integrated out. Each cutoff is proposed from a normal centred
    /// at its current value, truncated to keep the order. The latents of the
    /// group are left stale and must be redrawn next. Returns whether the
    /// proposal was accepted.
    pub fn cutoff_mh_update<R: Rng + ?Sized>(&self, state: &mut ProbitState, group: usize, rng: &mut R) -> Result<bool> {
        let current = state.cutoffs[group].interior().to_vec();
        let m = current.len();
        if m == 0 {
            return Ok(false);
        }
        let members = &self.members[group];
        let steps: Vec<f64> = (0..m)
            .map(|j| CUTOFF_MH_SCALE / ((members[j].len() + members[j + 1].len()).max(1) as f64).sqrt())
            .collect();
        let at = |s: &[f64], j: isize| -> f64 {
            if j < 0 {
                f64::NEG_INFINITY
            } else if j as usize >= m {
                f64::INFINITY
            } else {
                s[j as usize]
            }
        };
        let mut proposal = Vec::with_capacity(m);
        let mut ln_ratio = 0.0;
        for j in 0..m {
            let lo = at(&proposal, j as isize - 1);
            let hi = at(&current, j as isize + 1);
            let (c, step) = (current[j], steps[j]);
            let draw = sample_truncated(rng, c / step, lo / step, hi / step)
                .ok_or(Error::Numerical(format!("cutoff proposal {} has empty support", j + 1)))?;
            proposal.push((draw * step).clamp(lo, hi));
        }
        // the reverse move cannot reach the current cutoffs
        if (0..m - 1).any(|j| current[j] >= proposal[j + 1]) {
            return Ok(false);
        }
        for j in 0..m {
            let (c, p, step) = (current[j], proposal[j], steps[j]);
            let (jl, jh) = (j as isize - 1, j as isize + 1);
            // proposal normalisers, forward over reverse
            ln_ratio += ln_interval_prob((at(&proposal, jl) - c) / step, (at(&current, jh) - c) / step);
            ln_ratio -= ln_interval_prob((at(&current, jl) - p) / step, (at(&proposal, jh) - p) / step);
            ln_ratio -= (p * p - c * c) / (2.0 * self.prior_sd * self.prior_sd);
        }
        for (slot, members) in self.members[group].iter().enumerate() {
            for &i in members {
                let mu = self.design.linear(i, &state.beta);
                let (a, b) = (at(&current, slot as isize - 1), at(&current, slot as isize));
                let (a2, b2) = (at(&proposal, slot as isize - 1), at(&proposal, slot as isize));
                ln_ratio += ln_interval_prob(a2 - mu, b2 - mu) - ln_interval_prob(a - mu, b - mu);
            }
        }
        let u: f64 = rng.random();
        if u.ln() >= ln_ratio {
            return Ok(false);
        }
        match CutoffMap::new(proposal) {
            Ok(map) => {
                state.cutoffs[group] = map;
                Ok(true)
            }
            Err(_) => Ok(false),
        }
    }

    /// One full sweep: `beta`, then (probit) a joint cutoff move with the
    /// latents integrated out, the latents, and the single-cutoff updates.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut ProbitState, rng: &mut R) -> Result<()> {
        state.beta = self.gibbs_beta_update(state, rng);
        match self.likelihood {
            Likelihood::Probit => {
                for g in 0..self.groups() {
                    self.cutoff_mh_update(state, g, rng)?;
                }
                for i in 0..self.n() {
                    state.z[i] = self.gibbs_z_update_probit(state, i, rng)?;
                }
                for g in 0..self.groups() {
                    for j in 0..self.k - 1 {
                        let c = self.gibbs_cutoff_update(state, g, j, rng)?;
                        state.cutoffs[g].set(j, c);
                    }
                }
            }
            Likelihood::Rank => {
                self.rank_sweep(state, rng)?;
                self.refresh_rank_cutoffs(state);
            }
        }
        state.iteration += 1;
        debug_assert!(self.latents_consistent(state));
        Ok(())
    }

    /// Category by category from the bottom: units of one category are
    /// conditionally independent given the others, so this is a blocked
    /// version of the single-site update.
    fn rank_sweep<R: Rng + ?Sized>(&self, state: &mut ProbitState, rng: &mut R) -> Result<()> {
        for members in &self.members {
            let occupied: Vec<&Vec<usize>> = members.iter().filter(|m| !m.is_empty()).collect();
            let mut lo = f64::NEG_INFINITY;
            for (idx, units) in occupied.iter().enumerate() {
                let hi = match occupied.get(idx + 1) {
                    Some(next) => next.iter().fold(f64::INFINITY, |m, &u| m.min(state.z[u])),
                    None => f64::INFINITY,
                };
                let mut top = f64::NEG_INFINITY;
                for &i in units.iter() {
                    let z = self.truncated(rng, state, i, lo, hi)?;
                    state.z[i] = z;
                    top = top.max(z);
                }
                lo = top;
            }
        }
        Ok(())
    }

    /// Under the rank likelihood category `j` covers
    /// `(max latent of the next lower occupied category, max latent of j]`,
    /// and the top occupied category extends to infinity.
    fn refresh_rank_cutoffs(&self, state: &mut ProbitState) {
        state.cutoffs = self
            .members
            .iter()
            .map(|members| {
                let top = members.iter().rposition(|m| !m.is_empty()).unwrap_or(0);
                let mut s = Vec::with_capacity(self.k - 1);
                let mut last = f64::NEG_INFINITY;
                for (slot, units) in members.iter().enumerate().take(self.k - 1) {
                    if slot >= top {
                        s.push(f64::INFINITY);
                    } else {
                        last = units.iter().fold(last, |m, &u| m.max(state.z[u]));
                        s.push(last);
                    }
                }
                CutoffMap::from_thresholds(s)
            })
            .collect();
    }

    /// Every latent lies in the interval of its observed category.
    pub fn latents_consistent(&self, state: &ProbitState) -> bool {
        (0..self.n()).all(|i| state.cutoffs[self.group(i)].slot(state.z[i]) == self.y[i])
    }

    /// Draw the missing latent of unit `i` given its observed latent and
    /// return the zero-based category it maps to.
    fn impute_slot<R: Rng + ?Sized>(&self, state: &ProbitState, i: usize, rng: &mut R) -> usize {
        let obs_mean = self.design.linear(i, &state.beta);
        let mis_mean = match self.treatment_col {
            Some(c) => obs_mean + if self.treated[i] { -state.beta[c] } else { state.beta[c] },
            None => obs_mean,
        };
        let rho = state.rho;
        let mut z = mis_mean + rho * (state.z[i] - obs_mean);
        if rho < 1.0 {
            let e: f64 = rng.sample(StandardNormal);
            z += (1.0 - rho * rho).sqrt() * e;
        }
        state.cutoffs[self.arm_group(!self.treated[i])].slot(z)
    }

    /// Completed science table from the posterior predictive at `state`.
    pub fn impute_missing<R: Rng + ?Sized>(&self, state: &ProbitState, rng: &mut R) -> Result<ScienceTable> {
        check_rho(state.rho)?;
        let rows = (0..self.n())
            .map(|i| {
                let mis = Category::from_slot(self.impute_slot(state, i, rng));
                let obs = Category::from_slot(self.y[i]);
                if self.treated[i] { (mis, obs) } else { (obs, mis) }
            })
            .collect();
        ScienceTable::new(self.k, rows)
    }

    /// As [`impute_missing`](Self::impute_missing) but tabulated: `counts`
    /// receives the row-major `k x k` table of `(Y(0), Y(1))` pairs.
    pub fn impute_counts<R: Rng + ?Sized>(&self, state: &ProbitState, rng: &mut R, counts: &mut [u64]) {
        counts.fill(0);
        for i in 0..self.n() {
            let mis = self.impute_slot(state, i, rng);
            let obs = self.y[i];
            let (a, b) = if self.treated[i] { (mis, obs) } else { (obs, mis) };
            counts[a * self.k + b] += 1;
        }
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    fn small_study() -> ObservedStudy {
        ObservedStudy::from_arm_counts(&[6, 9, 3], &[2, 7, 8]).unwrap()
    }

    #[test]
    fn initial_state_is_consistent() {
        for lik in [Likelihood::Probit, Likelihood::Rank] {
            for sh in [CutoffSharing::Shared, CutoffSharing::PerArm] {
                let m = ProbitModel::new(&small_study(), lik, sh, 100.0).unwrap();
                let s = m.initial_state(0.5).unwrap();
                assert!(m.latents_consistent(&s), "{lik:?} {sh:?}");
            }
        }
    }

    #[test]
    fn empty_categories_initialise() {
        let s = ObservedStudy::from_arm_counts(&[0, 4, 0, 3, 0], &[0, 1, 0, 5, 0]).unwrap();
        let m = ProbitModel::new(&s, Likelihood::Probit, CutoffSharing::Shared, 100.0).unwrap();
        let mut st = m.initial_state(1.0).unwrap();
        assert!(m.latents_consistent(&st));
        let mut rng = SeedSpec::new(2).rng();
        for _ in 0..200 {
            m.sweep(&mut st, &mut rng).unwrap();
            assert!(m.latents_consistent(&st));
        }
    }

    #[test]
    fn sweeps_keep_invariants() {
        let mut rng = SeedSpec::new(1).rng();
        for lik in [Likelihood::Probit, Likelihood::Rank] {
            for sh in [CutoffSharing::Shared, CutoffSharing::PerArm] {
                let m = ProbitModel::new(&small_study(), lik, sh, 100.0).unwrap();
                let mut s = m.initial_state(0.5).unwrap();
                for _ in 0..300 {
                    m.sweep(&mut s, &mut rng).unwrap();
                    assert!(m.latents_consistent(&s));
                    for c in &s.cutoffs {
                        assert!(c.interior().windows(2).all(|w| w[0] <= w[1]));
                    }
                }
            }
        }
    }

    #[test]
    fn rank_update_respects_order() {
        let s = ObservedStudy::from_pairs(2, &[(1, false), (2, true)]).unwrap();
        let m = ProbitModel::new(&s, Likelihood::Rank, CutoffSharing::Shared, 100.0).unwrap();
        let mut st = m.initial_state(0.0).unwrap();
        let mut rng = SeedSpec::new(3).rng();
        for _ in 0..500 {
            st.z[0] = m.gibbs_z_update_rank(&st, 0, &mut rng).unwrap();
            assert!(st.z[0] < st.z[1]);
            st.z[1] = m.gibbs_z_update_rank(&st, 1, &mut rng).unwrap();
            assert!(st.z[0] < st.z[1]);
        }
    }

    #[test]
    fn cutoff_update_with_empty_side() {
        let s = ObservedStudy::from_arm_counts(&[3, 0, 4], &[2, 0, 5]).unwrap();
        let m = ProbitModel::new(&s, Likelihood::Probit, CutoffSharing::Shared, 100.0).unwrap();
        let st = m.initial_state(0.5).unwrap();
        let mut rng = SeedSpec::new(4).rng();
        let s1 = st.cutoffs[0].interior()[1];
        for _ in 0..200 {
            // category 2 is empty: the upper bound of the first cutoff is s_2
            let c = m.gibbs_cutoff_update(&st, 0, 0, &mut rng).unwrap();
            assert!(c <= s1);
        }
    }

    #[test]
    fn cutoff_move_targets_the_collapsed_posterior() {
        // beta fixed at 0.4; reference means by quadrature over (s1, s2)
        let s = ObservedStudy::from_arm_counts(&[3, 0, 1], &[1, 0, 3]).unwrap();
        let m = ProbitModel::new(&s, Likelihood::Probit, CutoffSharing::Shared, 1.0).unwrap();
        let mut st = m.initial_state(1.0).unwrap();
        st.beta = vec![0.4];
        let mut rng = SeedSpec::new(6).rng();
        let n = 100_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            m.cutoff_mh_update(&mut st, 0, &mut rng).unwrap();
            for i in 0..m.n() {
                st.z[i] = m.gibbs_z_update_probit(&st, i, &mut rng).unwrap();
            }
            sums[0] += st.cutoffs[0].interior()[0];
            sums[1] += st.cutoffs[0].interior()[1];
        }
        let means = sums.map(|v| v / n as f64);
        assert!((means[0] - 0.01285).abs() < 0.03, "{means:?}");
        assert!((means[1] - 0.27382).abs() < 0.03, "{means:?}");
    }

    #[test]
    fn rho_one_without_effect_reproduces_observed() {
        let m = ProbitModel::new(&small_study(), Likelihood::Probit, CutoffSharing::Shared, 100.0).unwrap();
        let mut st = m.initial_state(1.0).unwrap();
        let mut rng = SeedSpec::new(5).rng();
        m.sweep(&mut st, &mut rng).unwrap();
        st.beta = vec![0.0];
        let t = m.impute_missing(&st, &mut rng).unwrap();
        assert!(t.rows().iter().all(|(a, b)| a == b));
        let mr = ProbitModel::new(&small_study(), Likelihood::Rank, CutoffSharing::Shared, 100.0).unwrap();
        let mut st = mr.initial_state(1.0).unwrap();
        mr.sweep(&mut st, &mut rng).unwrap();
        st.beta = vec![0.0];
        let t = mr.impute_missing(&st, &mut rng).unwrap();
        assert!(t.rows().iter().all(|(a, b)| a == b));
    }

    #[test]
    fn rho_out_of_range() {
        let m = ProbitModel::new(&small_study(), Likelihood::Probit, CutoffSharing::Shared, 100.0).unwrap();
        assert!(m.initial_state(1.5).is_err());
        assert!(m.initial_state(-0.1).is_err());
    }
}
