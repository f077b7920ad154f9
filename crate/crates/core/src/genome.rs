//! The search-space individual: an n-by-n matrix of proposed kWh transfers.
//!
//! Entry `[i][j]` is the energy microgrid `i` offers to send to microgrid `j`.
//! Only seller-to-buyer positions are meaningful; the validity mask freezes
//! those positions for a whole run, and `adjust` turns raw proposals into
//! executable trades that respect seller surpluses, buyer deficits and the
//! per-interaction cap.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::domain::{buy_requirement, sell_capacity, Scenario, SurplusFloorPolicy};

/// Dense square matrix of proposed transfers, kWh. Diagonal is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TradeMatrix {
    pub fn zeros(n: usize) -> Self {
        TradeMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
    }

    /// Total energy sold by microgrid `i`.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Total energy received by microgrid `j`.
    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Replaces rows `r1..=r2` with the same rows of `other`.
    pub fn splice_rows(&mut self, other: &TradeMatrix, r1: usize, r2: usize) {
        debug_assert_eq!(self.n, other.n);
        let (a, b) = (r1 * self.n, (r2 + 1) * self.n);
        self.entries[a..b].copy_from_slice(&other.entries[a..b]);
    }

    /// Entrywise Euclidean distance to another matrix of the same size.
    pub fn distance(&self, other: &TradeMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Frozen map of which matrix positions denote a legal seller-to-buyer pair.
///
/// Positions pairing two sellers, two buyers, an inactive grid or a microgrid
/// with itself are never valid. Roles are fixed per episode, so the mask is
/// constant across a whole run.
#[derive(Debug, Clone)]
pub struct ValidityMask {
    n: usize,
    valid: Vec<bool>,
    pairs: Vec<(usize, usize)>,
}

impl ValidityMask {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let n = scenario.n();
        let mut valid = vec![false; n * n];
        let mut pairs = Vec::new();
        for i in 0..n {
            if !scenario.microgrids[i].is_seller() {
                continue;
            }
            for j in 0..n {
                if i != j && scenario.microgrids[j].is_buyer() {
                    valid[i * n + j] = true;
                    pairs.push((i, j));
                }
            }
        }
        ValidityMask { n, valid, pairs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.n + j]
    }

    /// Valid positions in row-major order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Draws a fresh individual: valid positions uniform in `[0, thv]`, all other
/// positions zero.
pub fn random_individual<R: Rng>(
    scenario: &Scenario,
    mask: &ValidityMask,
    rng: &mut R,
) -> TradeMatrix {
    let mut m = TradeMatrix::zeros(scenario.n());
    let dist = Uniform::new_inclusive(0.0, scenario.thv);
    for &(i, j) in mask.pairs() {
        m.set(i, j, dist.sample(rng));
    }
    m
}

/// Turns proposed transfers into executable ones.
///
/// Valid positions are visited in row-major order while residual seller
/// surplus and buyer deficit are tracked; each trade is capped by both
/// residuals, the proposal itself and the per-interaction limit `thv`.
/// Invalid positions come out zero. The result satisfies row sums within
/// sale capacity, column sums within buy requirement, and every entry in
/// `[0, thv]`.
pub fn adjust(
    scenario: &Scenario,
    trades: &TradeMatrix,
    policy: SurplusFloorPolicy,
) -> TradeMatrix {
    let mask = ValidityMask::from_scenario(scenario);
    adjust_with_mask(scenario, &mask, trades, policy)
}

/// `adjust` against a precomputed mask; the hot path inside the optimizer.
pub fn adjust_with_mask(
    scenario: &Scenario,
    mask: &ValidityMask,
    trades: &TradeMatrix,
    policy: SurplusFloorPolicy,
) -> TradeMatrix {
    let n = scenario.n();
    let mut surplus: Vec<f64> = scenario
        .microgrids
        .iter()
        .map(|m| sell_capacity(m, policy))
        .collect();
    let mut deficit: Vec<f64> = scenario.microgrids.iter().map(buy_requirement).collect();
    let mut out = TradeMatrix::zeros(n);
    for &(i, j) in mask.pairs() {
        let amount = trades
            .get(i, j)
            .min(surplus[i])
            .min(deficit[j])
            .min(scenario.thv)
            .max(0.0);
        out.set(i, j, amount);
        surplus[i] -= amount;
        deficit[j] -= amount;
    }
    out
}

/// Clamps every entry into `[0, thv]`.
pub fn clamp(trades: &TradeMatrix, thv: f64) -> TradeMatrix {
    let mut out = trades.clone();
    for v in &mut out.entries {
        *v = v.clamp(0.0, thv);
    }
    out
}
