use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Interior thresholds `s_1 < ... < s_{k-1}` of a latent-to-category map,
/// with `s_0 = -inf` and `s_k = +inf` implied. A latent `z` falls in
/// category `j` when `s_{j-1} < z <= s_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffMap {
    s: Vec<f64>,
}

impl CutoffMap {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(invalid("interior cutoffs must be finite"));
        }
        if s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("cutoffs must be strictly increasing"));
        }
        Ok(CutoffMap { s })
    }

    /// Non-decreasing thresholds, possibly infinite. Tied thresholds give
    /// categories that no latent maps to.
    pub(crate) fn from_thresholds(s: Vec<f64>) -> Self {
        debug_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        CutoffMap { s }
    }

    pub fn k(&self) -> usize {
        self.s.len() + 1
    }

    pub fn interior(&self) -> &[f64] {
        &self.s
    }

    pub(crate) fn set(&mut self, j: usize, value: f64) {
        self.s[j] = value;
    }

    /// Zero-based category slot of `z`.
    pub fn slot(&self, z: f64) -> usize {
        self.s.partition_point(|&c| c < z)
    }

    /// `(s_{j-1}, s_j)` for zero-based slot `j`.
    pub fn bounds(&self, slot: usize) -> (f64, f64) {
        let lo = if slot == 0 { f64::NEG_INFINITY } else { self.s[slot - 1] };
        let hi = self.s.get(slot).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}
