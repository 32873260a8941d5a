use rand::Rng;

use super::hypergeometric::LogFactorials;
use crate::model::ScienceTable;

/// A science table reduced to counts of `(Y(0), Y(1))` cells. Every statistic
/// used for randomisation here depends on a re-randomised table only through
/// the two arms' outcome counts, so unit identities can be dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    k: usize,
    cells: Vec<u64>,
}

impl PairCounts {
    pub fn zeros(k: usize) -> Self {
        PairCounts { k, cells: vec![0; k * k] }
    }

    pub fn from_table(table: &ScienceTable) -> Self {
        PairCounts { k: table.k(), cells: table.pair_counts() }
    }

    /// The table implied by the sharp null of no effect: every unit on the
    /// diagonal at its observed outcome.
    pub fn diagonal(outcome_counts: &[u64]) -> Self {
        let k = outcome_counts.len();
        let mut pc = PairCounts::zeros(k);
        for (i, &c) in outcome_counts.iter().enumerate() {
            pc.cells[i * k + i] = c;
        }
        pc
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn add(&mut self, y0_slot: usize, y1_slot: usize, n: u64) {
        self.cells[y0_slot * self.k + y1_slot] += n;
    }

    pub fn get(&self, y0_slot: usize, y1_slot: usize) -> u64 {
        self.cells[y0_slot * self.k + y1_slot]
    }
}

/// Draws the arm-level outcome counts produced by a uniformly random
/// assignment of a fixed number of treated units to a [`PairCounts`] table.
#[derive(Debug, Clone)]
pub struct Rerandomizer<'a> {
    k: usize,
    cells: Vec<(usize, usize, u64)>,
    total: u64,
    n_treated: u64,
    log_fact: &'a LogFactorials,
}

impl<'a> Rerandomizer<'a> {
    pub fn new(table: &PairCounts, n_treated: u64, log_fact: &'a LogFactorials) -> Self {
        let k = table.k;
        let cells: Vec<_> = (0..k * k)
            .filter(|&c| table.cells[c] > 0)
            .map(|c| (c / k, c % k, table.cells[c]))
            .collect();
        let total = table.total();
        assert!(n_treated <= total, "more treated units than units");
        assert!(log_fact.max() as u64 >= total, "log-factorial table too small");
        Rerandomizer { k, cells, total, n_treated, log_fact }
    }

    /// Fill `control` with `Y(0)` counts of the control arm and `treated` with
    /// `Y(1)` counts of the treated arm for one random assignment.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, control: &mut [u64], treated: &mut [u64]) {
        debug_assert!(control.len() == self.k && treated.len() == self.k);
        control.fill(0);
        treated.fill(0);
        let mut pop = self.total;
        let mut left = self.n_treated;
        let last = self.cells.len() - 1;
        for (idx, &(y0, y1, count)) in self.cells.iter().enumerate() {
            let t = if left == 0 {
                0
            } else if idx == last {
                left
            } else {
                self.log_fact.sample(rng, pop, count, left)
            };
            treated[y1] += t;
            control[y0] += count - t;
            left -= t;
            pop -= count;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpec;

    #[test]
    fn draws_preserve_arm_sizes_and_cell_totals() {
        let mut pc = PairCounts::zeros(3);
        pc.add(0, 0, 10);
        pc.add(0, 1, 7);
        pc.add(1, 2, 5);
        pc.add(2, 2, 8);
        let lf = LogFactorials::new(30);
        let rr = Rerandomizer::new(&pc, 12, &lf);
        let mut rng = SeedSpec::new(2).rng();
        let (mut c, mut t) = (vec![0; 3], vec![0; 3]);
        for _ in 0..1000 {
            rr.draw(&mut rng, &mut c, &mut t);
            assert_eq!(t.iter().sum::<u64>(), 12);
            assert_eq!(c.iter().sum::<u64>(), 18);
            // Y(0)=2 units only appear in control at level 2 and in treated at level 3
            assert!(c[0] <= 17 && t[0] <= 10);
        }
    }

    #[test]
    fn mean_counts_match_sampling_fraction() {
        let pc = PairCounts::diagonal(&[40, 60, 100]);
        let lf = LogFactorials::new(200);
        let rr = Rerandomizer::new(&pc, 50, &lf);
        let mut rng = SeedSpec::new(3).rng();
        let (mut c, mut t) = (vec![0; 3], vec![0; 3]);
        let reps = 20_000;
        let mut mean = [0.0; 3];
        for _ in 0..reps {
            rr.draw(&mut rng, &mut c, &mut t);
            for i in 0..3 {
                mean[i] += t[i] as f64 / reps as f64;
            }
        }
        for (m, want) in mean.iter().zip([10.0, 15.0, 25.0]) {
            assert!((m - want).abs() < 0.1, "{m} vs {want}");
        }
    }
}
