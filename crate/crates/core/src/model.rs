//! Science tables, observed studies and ordinal distributions.
//!
//! Outcomes live on an ordered scale of `k` categories. A [`Category`] is a
//! 1-based position on that scale; it can be compared and stepped to a
//! neighbour, but there is deliberately no way to subtract two categories.
//! Optional display labels ride along with tables and studies.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SeedSpec;

/// Sums of probability vectors must be within this of one.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// A level of an ordinal outcome, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Category(u32);

impl Category {
    pub fn new(index: u32) -> Option<Category> {
        (index >= 1).then_some(Category(index))
    }

    /// Like [`Category::new`] but also checks `index <= k`.
    pub fn checked(index: u32, k: usize) -> Result<Category> {
        if index >= 1 && (index as usize) <= k {
            Ok(Category(index))
        } else {
            Err(invalid(format!("category {index} outside 1..={k}")))
        }
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based slot for indexing per-category arrays.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn from_slot(slot: usize) -> Category {
        Category(slot as u32 + 1)
    }

    /// The category one step up the scale.
    pub fn next(self) -> Category {
        Category(self.0 + 1)
    }

    /// The category one step down, if any.
    pub fn prev(self) -> Option<Category> {
        Category::new(self.0 - 1)
    }
}

impl TryFrom<u32> for Category {
    type Error = String;
    fn try_from(v: u32) -> std::result::Result<Self, String> {
        Category::new(v).ok_or_else(|| "categories are 1-based".to_string())
    }
}

impl From<Category> for u32 {
    fn from(c: Category) -> u32 {
        c.0
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_labels(labels: &Option<Vec<String>>, k: usize) -> Result<()> {
    if let Some(labels) = labels {
        if labels.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: labels.len() });
        }
        let mut seen = std::collections::HashSet::new();
        for l in labels {
            if !seen.insert(l.as_str()) {
                return Err(invalid(format!("duplicate category label {l:?}")));
            }
        }
    }
    Ok(())
}

/// Complete potential-outcome pairs `(Y(0), Y(1))` for every unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScienceTable {
    k: usize,
    rows: Vec<(Category, Category)>,
    labels: Option<Vec<String>>,
}

impl ScienceTable {
    pub fn new(k: usize, rows: Vec<(Category, Category)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("a science table needs at least one row"));
        }
        for &(a, b) in &rows {
            Category::checked(a.index(), k)?;
            Category::checked(b.index(), k)?;
        }
        Ok(ScienceTable { k, rows, labels: None })
    }

    /// Build from raw 1-based indices.
    pub fn from_indices(k: usize, rows: &[(u32, u32)]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|&(a, b)| Ok((Category::checked(a, k)?, Category::checked(b, k)?)))
            .collect::<Result<Vec<_>>>()?;
        ScienceTable::new(k, rows)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        let labels = Some(labels);
        check_labels(&labels, self.k)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(Category, Category)] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Row-major `k x k` counts of `(Y(0), Y(1))` pairs.
    pub fn pair_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k * self.k];
        for &(a, b) in &self.rows {
            counts[a.slot() * self.k + b.slot()] += 1;
        }
        counts
    }

    /// Empirical joint distribution of the table's rows.
    pub fn empirical_joint(&self) -> JointDistribution {
        let n = self.rows.len() as f64;
        let p = self.pair_counts().into_iter().map(|c| c as f64 / n).collect();
        JointDistribution { k: self.k, p }
    }

    /// Whether `Y(1) >= Y(0)` for every unit.
    pub fn is_monotone(&self) -> bool {
        self.rows.iter().all(|&(a, b)| b >= a)
    }
}

/// One observed unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub y: Category,
    pub treated: bool,
    #[serde(default)]
    pub x: Vec<f64>,
}

/// Observed outcomes, treatment indicators and optional covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedStudy {
    k: usize,
    units: Vec<Unit>,
    labels: Option<Vec<String>>,
}

impl ObservedStudy {
    pub fn new(k: usize, units: Vec<Unit>) -> Result<Self> {
        let n_treated = units.iter().filter(|u| u.treated).count();
        if n_treated == 0 || n_treated == units.len() {
            return Err(Error::DegenerateAssignment);
        }
        let d = units[0].x.len();
        for (i, u) in units.iter().enumerate() {
            Category::checked(u.y.index(), k)?;
            if u.x.len() != d {
                return Err(invalid(format!(
                    "unit {i} has {} covariates, expected {d}",
                    u.x.len()
                )));
            }
        }
        Ok(ObservedStudy { k, units, labels: None })
    }

    /// Build a covariate-free study from `(y, treated)` pairs.
    pub fn from_pairs(k: usize, pairs: &[(u32, bool)]) -> Result<Self> {
        let units = pairs
            .iter()
            .map(|&(y, treated)| {
                Ok(Unit { y: Category::checked(y, k)?, treated, x: Vec::new() })
            })
            .collect::<Result<Vec<_>>>()?;
        ObservedStudy::new(k, units)
    }

    /// Build a covariate-free study from per-arm category counts.
    pub fn from_arm_counts(control: &[u64], treated: &[u64]) -> Result<Self> {
        if control.len() != treated.len() {
            return Err(Error::CategoryMismatch { left: control.len(), right: treated.len() });
        }
        let mut units = Vec::new();
        for (arm, counts) in [(false, control), (true, treated)] {
            for (slot, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    units.push(Unit { y: Category::from_slot(slot), treated: arm, x: Vec::new() });
                }
            }
        }
        if units.is_empty() {
            return Err(Error::DegenerateAssignment);
        }
        ObservedStudy::new(control.len(), units)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        let labels = Some(labels);
        check_labels(&labels, self.k)?;
        self.labels = labels;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn covariate_dim(&self) -> usize {
        self.units.first().map_or(0, |u| u.x.len())
    }

    pub fn n_treated(&self) -> usize {
        self.units.iter().filter(|u| u.treated).count()
    }

    pub fn n_control(&self) -> usize {
        self.len() - self.n_treated()
    }

    pub fn assignment(&self) -> Vec<bool> {
        self.units.iter().map(|u| u.treated).collect()
    }

    /// Per-category counts for the control and treated arms.
    pub fn arm_counts(&self) -> (Vec<u64>, Vec<u64>) {
        let mut control = vec![0u64; self.k];
        let mut treated = vec![0u64; self.k];
        for u in &self.units {
            if u.treated {
                treated[u.y.slot()] += 1;
            } else {
                control[u.y.slot()] += 1;
            }
        }
        (control, treated)
    }

    /// Same study with categories mapped through `map`, which must be
    /// strictly increasing, onto a scale of `new_k` levels.
    pub fn relabel(&self, new_k: usize, map: impl Fn(Category) -> Category) -> Result<Self> {
        for a in 1..self.k as u32 {
            let (lo, hi) = (map(Category(a)), map(Category(a + 1)));
            if lo >= hi {
                return Err(invalid("relabelling map must be strictly increasing"));
            }
        }
        let units = self
            .units
            .iter()
            .map(|u| Ok(Unit { y: Category::checked(map(u.y).index(), new_k)?, ..u.clone() }))
            .collect::<Result<Vec<_>>>()?;
        ObservedStudy::new(new_k, units)
    }
}

/// A probability vector over categories `1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OrdinalDistribution {
    probs: Vec<f64>,
}

impl OrdinalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("a distribution needs at least one category"));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid(format!("negative or non-finite probability in {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(OrdinalDistribution { probs })
    }

    /// Normalise nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(invalid("weights must have a positive finite total"));
        }
        OrdinalDistribution::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(invalid("all counts are zero"));
        }
        Ok(OrdinalDistribution {
            probs: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    pub fn point_mass(k: usize, at: Category) -> Result<Self> {
        let mut probs = vec![0.0; k];
        probs[Category::checked(at.index(), k)?.slot()] = 1.0;
        Ok(OrdinalDistribution { probs })
    }

    pub fn uniform(k: usize) -> Self {
        OrdinalDistribution { probs: vec![1.0 / k as f64; k] }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, c: Category) -> f64 {
        self.probs.get(c.slot()).copied().unwrap_or(0.0)
    }

    /// `Pr(Y <= c)`.
    pub fn cdf(&self, c: Category) -> f64 {
        self.probs.iter().take(c.index() as usize).sum()
    }
}

impl TryFrom<Vec<f64>> for OrdinalDistribution {
    type Error = String;
    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        OrdinalDistribution::new(v).map_err(|e| e.to_string())
    }
}

impl From<OrdinalDistribution> for Vec<f64> {
    fn from(d: OrdinalDistribution) -> Vec<f64> {
        d.probs
    }
}

/// Joint law of `(Y(0), Y(1))`: entry `(i, j)` is `Pr(Y(0)=i, Y(1)=j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    k: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    /// `p` is row-major, rows indexed by `Y(0)`.
    pub fn new(k: usize, p: Vec<f64>) -> Result<Self> {
        if k == 0 || p.len() != k * k {
            return Err(Error::LengthMismatch { expected: k * k, got: p.len() });
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("joint entries must be finite and nonnegative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(invalid(format!("joint entries sum to {total}, not 1")));
        }
        Ok(JointDistribution { k, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(invalid("joint matrix must be square"));
        }
        JointDistribution::new(k, rows.concat())
    }

    pub fn point_mass(k: usize, y0: Category, y1: Category) -> Result<Self> {
        let mut p = vec![0.0; k * k];
        p[Category::checked(y0.index(), k)?.slot() * k + Category::checked(y1.index(), k)?.slot()] =
            1.0;
        JointDistribution::new(k, p)
    }

    /// No effect: all mass on the diagonal, following `marginal`.
    pub fn diagonal(marginal: &OrdinalDistribution) -> Self {
        let k = marginal.k();
        let mut p = vec![0.0; k * k];
        for (i, &m) in marginal.probs().iter().enumerate() {
            p[i * k + i] = m;
        }
        JointDistribution { k, p }
    }

    /// Independent coupling of two marginals.
    pub fn independent(p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<Self> {
        if p0.k() != p1.k() {
            return Err(Error::CategoryMismatch { left: p0.k(), right: p1.k() });
        }
        let p = p0
            .probs()
            .iter()
            .flat_map(|a| p1.probs().iter().map(move |b| a * b))
            .collect();
        Ok(JointDistribution { k: p0.k(), p })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, y0: Category, y1: Category) -> f64 {
        self.p[y0.slot() * self.k + y1.slot()]
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    /// Row of the matrix for `Y(0) = y0`, i.e. unnormalised `Y(1) | Y(0)=y0`.
    pub fn row(&self, y0: Category) -> &[f64] {
        let s = y0.slot() * self.k;
        &self.p[s..s + self.k]
    }

    /// Marginal of `Y(0)` (row sums).
    pub fn control_marginal(&self) -> OrdinalDistribution {
        let probs = (0..self.k).map(|i| self.p[i * self.k..(i + 1) * self.k].iter().sum()).collect();
        OrdinalDistribution { probs }
    }

    /// Marginal of `Y(1)` (column sums).
    pub fn treated_marginal(&self) -> OrdinalDistribution {
        let probs = (0..self.k).map(|j| (0..self.k).map(|i| self.p[i * self.k + j]).sum()).collect();
        OrdinalDistribution { probs }
    }
}

/// Joint law in which treatment moves a unit up at most one level: a unit
/// with `Y(0) = i < k` steps up with probability `q[i]`, and `Y(0)` follows
/// `c`. For `k = 3` this is the usual three-level staircase design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseJoint {
    pub c: Vec<f64>,
    pub q: Vec<f64>,
}

impl StaircaseJoint {
    pub fn new(c: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        OrdinalDistribution::new(c.clone())?;
        if q.len() + 1 != c.len() {
            return Err(Error::LengthMismatch { expected: c.len() - 1, got: q.len() });
        }
        if q.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(invalid("step-up probabilities must lie in [0, 1]"));
        }
        Ok(StaircaseJoint { c, q })
    }

    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn expand(&self) -> JointDistribution {
        let k = self.k();
        let mut p = vec![0.0; k * k];
        for i in 0..k {
            if i + 1 < k {
                p[i * k + i] = (1.0 - self.q[i]) * self.c[i];
                p[i * k + i + 1] = self.q[i] * self.c[i];
            } else {
                p[i * k + i] = self.c[i];
            }
        }
        JointDistribution { k, p }
    }
}

/// Observe `Y(1)` for treated units and `Y(0)` for controls.
pub fn reveal(table: &ScienceTable, assignment: &[bool]) -> Result<ObservedStudy> {
    if assignment.len() != table.len() {
        return Err(Error::LengthMismatch { expected: table.len(), got: assignment.len() });
    }
    let units = table
        .rows()
        .iter()
        .zip(assignment)
        .map(|(&(y0, y1), &treated)| Unit { y: if treated { y1 } else { y0 }, treated, x: Vec::new() })
        .collect();
    let study = ObservedStudy::new(table.k(), units)?;
    match table.labels() {
        Some(l) => study.with_labels(l.to_vec()),
        None => Ok(study),
    }
}

/// Empirical control and treated distributions of the observed outcomes.
pub fn empirical_marginals(study: &ObservedStudy) -> (OrdinalDistribution, OrdinalDistribution) {
    let (c, t) = study.arm_counts();
    // both arms are nonempty by construction of ObservedStudy
    (
        OrdinalDistribution::from_counts(&c).expect("control arm nonempty"),
        OrdinalDistribution::from_counts(&t).expect("treated arm nonempty"),
    )
}

/// Draw `n` i.i.d. rows from `joint`.
pub fn simulate_science(joint: &JointDistribution, n: usize, seed: SeedSpec) -> Result<ScienceTable> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    JointDistribution::new(joint.k, joint.p.clone())?;
    let k = joint.k;
    let mut cum = Vec::with_capacity(k * k);
    let mut acc = 0.0;
    for &v in &joint.p {
        acc += v;
        cum.push(acc);
    }
    let last_nonzero = joint.p.iter().rposition(|&v| v > 0.0).expect("joint has mass");
    let mut rng = seed.rng();
    let rows = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let cell = cum.partition_point(|&c| c <= u).min(last_nonzero);
            (Category::from_slot(cell / k), Category::from_slot(cell % k))
        })
        .collect();
    ScienceTable::new(k, rows)
}

/// Completely randomised assignment with exactly `n_treated` treated units.
pub fn complete_randomization(n: usize, n_treated: usize, seed: SeedSpec) -> Result<Vec<bool>> {
    if n_treated == 0 || n_treated >= n {
        return Err(Error::DegenerateAssignment);
    }
    let mut w: Vec<bool> = (0..n).map(|i| i < n_treated).collect();
    w.shuffle(&mut seed.rng());
    Ok(w)
}
