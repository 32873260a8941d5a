//! Causal estimands on the observed ordinal scale.
//!
//! Every quantity here depends on the categories only through their order.
//! Estimands split into two families: those that are functions of the two
//! marginals `(P0, P1)` separately and can be estimated from an observed
//! study, and those that need the joint law of `(Y(0), Y(1))` and so need a
//! model for the missing potential outcomes. [`Estimand::separability`]
//! records which family an estimand belongs to, and [`evaluate_observed`]
//! refuses to compute the second kind from observed data alone.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{
    empirical_marginals, Category, JointDistribution, ObservedStudy, OrdinalDistribution,
    ScienceTable, PROB_TOLERANCE,
};

/// Distance between two ordinal distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `sum_i |p1(i) - p0(i)|`.
    #[default]
    L1,
    /// Half the L1 distance.
    TotalVariation,
}

impl Metric {
    pub fn distance(self, p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<f64> {
        let d = l1_distance(p0, p1)?;
        Ok(match self {
            Metric::L1 => d,
            Metric::TotalVariation => 0.5 * d,
        })
    }
}

fn same_k(p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<()> {
    if p0.k() != p1.k() {
        return Err(Error::CategoryMismatch { left: p0.k(), right: p1.k() });
    }
    Ok(())
}

/// Unhalved L1 distance between the marginals.
pub fn l1_distance(p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<f64> {
    same_k(p0, p1)?;
    Ok(p0.probs().iter().zip(p1.probs()).map(|(a, b)| (b - a).abs()).sum())
}

/// Total variation distance, `l1_distance / 2`.
pub fn total_variation(p0: &OrdinalDistribution, p1: &OrdinalDistribution) -> Result<f64> {
    Metric::TotalVariation.distance(p0, p1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryKind {
    Median,
    Mode,
}

/// Lower median of a weight vector over categories: the smallest category
/// whose cumulative weight reaches half the total. `None` for zero weight.
pub fn lower_median(weights: &[f64]) -> Option<Category> {
    lower_quantile(weights, 0.5)
}

/// Smallest category whose cumulative weight reaches `level` of the total.
pub fn lower_quantile(weights: &[f64], level: f64) -> Option<Category> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = level * total - PROB_TOLERANCE * total;
    let mut acc = 0.0;
    for (slot, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && acc >= target {
            return Some(Category::from_slot(slot));
        }
    }
    weights.iter().rposition(|&w| w > 0.0).map(Category::from_slot)
}

/// Mode with ties broken towards the smallest category.
pub fn mode(weights: &[f64]) -> Option<Category> {
    let mut best: Option<(usize, f64)> = None;
    for (slot, &w) in weights.iter().enumerate() {
        if w > 0.0 && best.is_none_or(|(_, b)| w > b) {
            best = Some((slot, w));
        }
    }
    best.map(|(s, _)| Category::from_slot(s))
}

/// Per-level summary of `Y(1) | Y(0) = i`; `None` where `Pr(Y(0)=i) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSummary {
    pub kind: SummaryKind,
    pub values: Vec<Option<Category>>,
}

impl ConditionalSummary {
    pub fn get(&self, given: Category) -> Option<Category> {
        self.values.get(given.slot()).copied().flatten()
    }

    pub fn defined_mask(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_some).collect()
    }
}

/// Median or mode of `Y(1)` given each level of `Y(0)`.
pub fn conditional_summary(joint: &JointDistribution, kind: SummaryKind) -> ConditionalSummary {
    let values = (0..joint.k())
        .map(|slot| {
            let row = joint.row(Category::from_slot(slot));
            match kind {
                SummaryKind::Median => lower_median(row),
                SummaryKind::Mode => mode(row),
            }
        })
        .collect();
    ConditionalSummary { kind, values }
}

/// Same as [`conditional_summary`] computed on a table's integer counts, which
/// avoids rounding in the median comparison.
pub fn table_conditional_summary(table: &ScienceTable, kind: SummaryKind) -> ConditionalSummary {
    let k = table.k();
    let counts: Vec<f64> = table.pair_counts().into_iter().map(|c| c as f64).collect();
    let values = (0..k)
        .map(|i| {
            let row = &counts[i * k..(i + 1) * k];
            match kind {
                SummaryKind::Median => lower_median(row),
                SummaryKind::Mode => mode(row),
            }
        })
        .collect();
    ConditionalSummary { kind, values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionalDeltas {
    /// `P1(i) - P0(i)`.
    pub delta_ate: Vec<f64>,
    /// Cumulative sums of `delta_ate`.
    pub delta_so: Vec<f64>,
    /// `delta_so(i) <= 0` for every `i`: treated CDF never above control CDF.
    pub treated_dominates: bool,
}

pub fn distributional_deltas(
    p0: &OrdinalDistribution,
    p1: &OrdinalDistribution,
) -> Result<DistributionalDeltas> {
    same_k(p0, p1)?;
    let delta_ate: Vec<f64> = p0.probs().iter().zip(p1.probs()).map(|(a, b)| b - a).collect();
    let delta_so: Vec<f64> = delta_ate
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    let treated_dominates = delta_so.iter().all(|&d| d <= PROB_TOLERANCE);
    Ok(DistributionalDeltas { delta_ate, delta_so, treated_dominates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MostLikelyPair {
    pub pair: (Category, Category),
    pub probability: f64,
}

/// Argmax cell of the joint, ties to the smallest `(i, j)` in row-major order.
pub fn most_likely_pair(joint: &JointDistribution) -> MostLikelyPair {
    let k = joint.k();
    let (cell, &probability) = joint
        .entries()
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &f64)>, (i, v)| match best {
            Some((_, b)) if *v <= *b => best,
            _ => Some((i, v)),
        })
        .expect("joint is nonempty");
    MostLikelyPair {
        pair: (Category::from_slot(cell / k), Category::from_slot(cell % k)),
        probability,
    }
}

/// Recover the joint of a binary outcome under a monotone treatment effect
/// (`Y(1) >= Y(0)`), where it is identified from the marginals alone.
pub fn monotone_binary_joint(
    p0: &OrdinalDistribution,
    p1: &OrdinalDistribution,
) -> Result<JointDistribution> {
    same_k(p0, p1)?;
    if p0.k() != 2 {
        return Err(invalid(format!("monotone joint recovery needs k = 2, got {}", p0.k())));
    }
    let treated_low = p1.probs()[0];
    let control_high = p0.probs()[1];
    let cross = 1.0 - treated_low - control_high;
    if cross < -PROB_TOLERANCE {
        return Err(invalid(format!(
            "marginals contradict monotonicity: Pr(Y(1)=low) = {treated_low} exceeds Pr(Y(0)=low) = {}",
            p0.probs()[0]
        )));
    }
    JointDistribution::new(2, vec![treated_low, cross.max(0.0), 0.0, control_high])
}

/// One checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub level: Category,
    pub lhs: Category,
    pub rhs: Category,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    pub fn is_tight(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// The three families of median bounds implied by a monotone effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneBoundsReport {
    /// `j <= median[Y(1) | Y(0) = j]`.
    pub at_level: Vec<BoundCheck>,
    /// `j <= median[Y(1) | Y(0) >= j]`.
    pub at_or_above: Vec<BoundCheck>,
    /// `median[Y(0) | Y(0) <= j] <= median[Y(1) | Y(0) <= j]`.
    pub at_or_below: Vec<BoundCheck>,
}

impl MonotoneBoundsReport {
    pub fn all_hold(&self) -> bool {
        self.at_level
            .iter()
            .chain(&self.at_or_above)
            .chain(&self.at_or_below)
            .all(BoundCheck::holds)
    }
}

pub fn monotone_bounds_check(table: &ScienceTable) -> Result<MonotoneBoundsReport> {
    if !table.is_monotone() {
        return Err(invalid("science table violates Y(1) >= Y(0)"));
    }
    let k = table.k();
    let hist = |pred: &dyn Fn(Category) -> bool, pick_treated: bool| -> Vec<f64> {
        let mut w = vec![0.0; k];
        for &(y0, y1) in table.rows() {
            if pred(y0) {
                w[if pick_treated { y1 } else { y0 }.slot()] += 1.0;
            }
        }
        w
    };
    let mut report = MonotoneBoundsReport {
        at_level: Vec::new(),
        at_or_above: Vec::new(),
        at_or_below: Vec::new(),
    };
    for slot in 0..k {
        let j = Category::from_slot(slot);
        if let Some(m) = lower_median(&hist(&|y0| y0 == j, true)) {
            report.at_level.push(BoundCheck { level: j, lhs: j, rhs: m });
        }
        if let Some(m) = lower_median(&hist(&|y0| y0 >= j, true)) {
            report.at_or_above.push(BoundCheck { level: j, lhs: j, rhs: m });
        }
        let below0 = lower_median(&hist(&|y0| y0 <= j, false));
        let below1 = lower_median(&hist(&|y0| y0 <= j, true));
        if let (Some(a), Some(b)) = (below0, below1) {
            report.at_or_below.push(BoundCheck { level: j, lhs: a, rhs: b });
        }
    }
    Ok(report)
}

/// Estimands known to the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    L1Distance,
    TotalVariation,
    DistributionalDeltas,
    ConditionalMedian,
    ConditionalMode,
    MostLikelyPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separability {
    /// A contrast of a functional of `P1` with a functional of `P0`.
    MarginalOnly,
    /// Depends on the joint law of the potential outcomes.
    RequiresJoint,
}

impl Estimand {
    pub const ALL: [Estimand; 6] = [
        Estimand::L1Distance,
        Estimand::TotalVariation,
        Estimand::DistributionalDeltas,
        Estimand::ConditionalMedian,
        Estimand::ConditionalMode,
        Estimand::MostLikelyPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimand::L1Distance => "l1_distance",
            Estimand::TotalVariation => "total_variation",
            Estimand::DistributionalDeltas => "distributional_deltas",
            Estimand::ConditionalMedian => "conditional_median",
            Estimand::ConditionalMode => "conditional_mode",
            Estimand::MostLikelyPair => "most_likely_pair",
        }
    }

    pub fn separability(self) -> Separability {
        match self {
            Estimand::L1Distance | Estimand::TotalVariation | Estimand::DistributionalDeltas => {
                Separability::MarginalOnly
            }
            Estimand::ConditionalMedian | Estimand::ConditionalMode | Estimand::MostLikelyPair => {
                Separability::RequiresJoint
            }
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimand::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| invalid(format!("unknown estimand {s:?}")))
    }
}

/// Classify an estimand by name.
pub fn separability_guard(name: &str) -> Result<Separability> {
    Ok(name.parse::<Estimand>()?.separability())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimandValue {
    Scalar(f64),
    Deltas(DistributionalDeltas),
    Conditional(ConditionalSummary),
    Pair(MostLikelyPair),
}

/// Evaluate an estimand on a fully specified joint law.
pub fn evaluate_joint(estimand: Estimand, joint: &JointDistribution) -> EstimandValue {
    let p0 = joint.control_marginal();
    let p1 = joint.treated_marginal();
    match estimand {
        Estimand::L1Distance => EstimandValue::Scalar(l1_distance(&p0, &p1).expect("same k")),
        Estimand::TotalVariation => {
            EstimandValue::Scalar(total_variation(&p0, &p1).expect("same k"))
        }
        Estimand::DistributionalDeltas => {
            EstimandValue::Deltas(distributional_deltas(&p0, &p1).expect("same k"))
        }
        Estimand::ConditionalMedian => {
            EstimandValue::Conditional(conditional_summary(joint, SummaryKind::Median))
        }
        Estimand::ConditionalMode => {
            EstimandValue::Conditional(conditional_summary(joint, SummaryKind::Mode))
        }
        Estimand::MostLikelyPair => EstimandValue::Pair(most_likely_pair(joint)),
    }
}

/// Evaluate a marginal-only estimand from observed data. Estimands that need
/// the joint are refused: they require a model for the science.
pub fn evaluate_observed(estimand: Estimand, study: &ObservedStudy) -> Result<EstimandValue> {
    if estimand.separability() == Separability::RequiresJoint {
        return Err(Error::Undefined(format!(
            "{estimand} depends on the joint of the potential outcomes and cannot be computed from observed data alone"
        )));
    }
    let (p0, p1) = empirical_marginals(study);
    Ok(match estimand {
        Estimand::L1Distance => EstimandValue::Scalar(l1_distance(&p0, &p1)?),
        Estimand::TotalVariation => EstimandValue::Scalar(total_variation(&p0, &p1)?),
        _ => EstimandValue::Deltas(distributional_deltas(&p0, &p1)?),
    })
}
