use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimands::Metric;
use crate::model::{Category, ObservedStudy};

/// A test statistic computed from the outcome counts of the two arms:
/// `control[i]` units in category `i + 1` under control, likewise `treated`.
pub trait ArmStatistic: Sync {
    fn evaluate(&self, control: &[u64], treated: &[u64]) -> f64;
}

impl<F> ArmStatistic for F
where
    F: Fn(&[u64], &[u64]) -> f64 + Sync,
{
    fn evaluate(&self, control: &[u64], treated: &[u64]) -> f64 {
        self(control, treated)
    }
}

/// Distance between the two arms' empirical distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceStatistic(pub Metric);

impl ArmStatistic for DistanceStatistic {
    fn evaluate(&self, control: &[u64], treated: &[u64]) -> f64 {
        let nc = control.iter().sum::<u64>() as f64;
        let nt = treated.iter().sum::<u64>() as f64;
        let l1: f64 = control
            .iter()
            .zip(treated)
            .map(|(&c, &t)| (t as f64 / nt - c as f64 / nc).abs())
            .sum();
        match self.0 {
            Metric::L1 => l1,
            Metric::TotalVariation => 0.5 * l1,
        }
    }
}

/// Statistic selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticChoice {
    L1,
    Tv,
    /// [`StepUpEstimate`] at the given level.
    StepUp(Category),
}

impl ArmStatistic for StatisticChoice {
    fn evaluate(&self, control: &[u64], treated: &[u64]) -> f64 {
        match *self {
            StatisticChoice::L1 => DistanceStatistic(Metric::L1).evaluate(control, treated),
            StatisticChoice::Tv => DistanceStatistic(Metric::TotalVariation).evaluate(control, treated),
            StatisticChoice::StepUp(level) => StepUpEstimate { level }.evaluate(control, treated),
        }
    }
}

/// Plug-in estimate of the probability that treatment moves a unit at
/// `level` up one category, assuming nobody moves more than one step:
/// `1 - (F1(j) - F0(j-1)) / P0(j)`, truncated to `[0, 1]`. For the lowest
/// level this is `1 - P1(1) / P0(1)`.
///
/// When the control arm has no units at `level` the estimate is taken to be
/// zero, so randomisation draws that empty that cell stay defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepUpEstimate {
    pub level: Category,
}

impl ArmStatistic for StepUpEstimate {
    fn evaluate(&self, control: &[u64], treated: &[u64]) -> f64 {
        step_up_estimate(control, treated, self.level).unwrap_or(0.0)
    }
}

fn step_up_estimate(control: &[u64], treated: &[u64], level: Category) -> Option<f64> {
    let j = level.slot();
    if control[j] == 0 {
        return None;
    }
    // exact integer numerator so that equal arms give exactly zero
    let nc = control.iter().sum::<u64>() as i128;
    let nt = treated.iter().sum::<u64>() as i128;
    let t_upto = treated[..=j].iter().sum::<u64>() as i128;
    let c_below = control[..j].iter().sum::<u64>() as i128;
    let denom = nt * control[j] as i128;
    let num = denom - (t_upto * nc - c_below * nt);
    Some((num as f64 / denom as f64).clamp(0.0, 1.0))
}

/// Estimated step-up probability at `level` from an observed study.
pub fn estimate_q(study: &ObservedStudy, level: Category) -> Result<f64> {
    if level.slot() + 1 >= study.k() {
        return Err(Error::InvalidInput(format!(
            "level {level} has no category above it on a {}-level scale",
            study.k()
        )));
    }
    let (c, t) = study.arm_counts();
    step_up_estimate(&c, &t, level).ok_or_else(|| {
        Error::Undefined(format!("no control units observed at level {level}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObservedStudy;

    fn cat(i: u32) -> Category {
        Category::new(i).unwrap()
    }

    #[test]
    fn distance_on_counts_matches_l1() {
        let s = DistanceStatistic(Metric::L1);
        let d = s.evaluate(&[79, 378, 52, 112, 49], &[2, 46, 11, 65, 41]);
        assert!((d - 0.8042514699231117).abs() < 1e-12);
        let tv = DistanceStatistic(Metric::TotalVariation).evaluate(&[1, 0], &[0, 1]);
        assert_eq!(tv, 1.0);
    }

    #[test]
    fn q_hat_lowest_level() {
        // control 40 at level 1 out of 100, treated 10 at level 1 out of 100
        let s = ObservedStudy::from_arm_counts(&[40, 30, 30], &[10, 50, 40]).unwrap();
        assert!((estimate_q(&s, cat(1)).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn q_hat_no_effect_and_clamp() {
        let s = ObservedStudy::from_arm_counts(&[40, 30, 30], &[40, 30, 30]).unwrap();
        assert_eq!(estimate_q(&s, cat(1)).unwrap(), 0.0);
        assert_eq!(estimate_q(&s, cat(2)).unwrap(), 0.0);
        let s = ObservedStudy::from_arm_counts(&[20, 40, 40], &[60, 20, 20]).unwrap();
        assert_eq!(estimate_q(&s, cat(1)).unwrap(), 0.0);
    }

    #[test]
    fn q_hat_second_level_accounts_for_inflow() {
        // Staircase marginals with c = (1/3,1/3,1/3), q = (0.7, 2/3):
        // P1 = (0.1, 0.3444.., 0.5555..); the second-level estimate recovers 2/3.
        let c = [300u64, 300, 300];
        let t = [90u64, 310, 500];
        let q2 = step_up_estimate(&c, &t, cat(2)).unwrap();
        assert!((q2 - 2.0 / 3.0).abs() < 1e-12, "{q2}");
        let q1 = step_up_estimate(&c, &t, cat(1)).unwrap();
        assert!((q1 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn q_hat_errors() {
        let s = ObservedStudy::from_arm_counts(&[0, 5, 5], &[1, 4, 5]).unwrap();
        assert!(matches!(estimate_q(&s, cat(1)), Err(Error::Undefined(_))));
        assert_eq!(StepUpEstimate { level: cat(1) }.evaluate(&[0, 5, 5], &[1, 4, 5]), 0.0);
        assert!(estimate_q(&s, cat(3)).is_err());
    }
}
