//! Multi-criteria evaluation of a trade matrix.
//!
//! A candidate is scored by seller payoff, the number of microgrids that end
//! inside their stability band, a community-wide stability bonus, and four
//! penalties (instability deviation, dove over-trading, battery wear, line
//! overload). The score is normalized by a theoretical maximum so runs with
//! different community sizes are comparable.

use serde::{Deserialize, Serialize};

use crate::domain::{is_stable, settle, Role, Scenario, SurplusFloorPolicy};
use crate::error::{Error, Result};
use crate::genome::{adjust, TradeMatrix};

/// Whose final stability decides the per-unit payoff of a transfer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKey {
    /// Reward transfers that leave the receiving buyer stable (default).
    #[default]
    Buyer,
    /// Reward transfers that leave the selling microgrid stable.
    Seller,
}

/// All tunable coefficients of the evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    /// Weight of the seller payoff term.
    pub alpha: f64,
    /// Weight of the stable-microgrid count.
    pub beta: f64,
    /// Weight of the community stability bonus.
    pub gamma: f64,
    /// Multiplier on the aggregate penalty.
    pub delta: f64,
    /// Penalty weights: instability, dove strategy, battery cycles, overhead.
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    /// Tolerated fraction of the line limit before overhead kicks in.
    pub mu: f64,
    /// Maximum distinct buyers a dove seller may serve without penalty.
    pub n_max: usize,
    /// Profit per kWh when the keyed endpoint ends stable.
    pub payoff_stable: f64,
    /// Profit per kWh otherwise.
    pub payoff_other: f64,
    pub payoff_keyed_to: PayoffKey,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        // alpha deliberately keeps the payoff term an order of magnitude
        // below the stability terms: the payoff ceiling in the normalizer
        // assumes every microgrid moves a full thv, which real deficits
        // never reach, and community stability is the primary objective.
        FitnessWeights {
            alpha: 0.05,
            beta: 1.0,
            gamma: 1.0,
            delta: 1.0,
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            w4: 1.0,
            mu: 0.8,
            n_max: 3,
            payoff_stable: 2.5,
            payoff_other: 1.2,
            payoff_keyed_to: PayoffKey::Buyer,
        }
    }
}

impl FitnessWeights {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("w1", self.w1),
            ("w2", self.w2),
            ("w3", self.w3),
            ("w4", self.w4),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidConfig(format!(
                "mu must lie in [0, 1], got {}",
                self.mu
            )));
        }
        if self.payoff_stable < self.payoff_other {
            return Err(Error::InvalidConfig(format!(
                "payoff_stable {} must be at least payoff_other {}",
                self.payoff_stable, self.payoff_other
            )));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Full decomposition of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub payoff: f64,
    pub stable_count: usize,
    pub bonus: f64,
    pub p_stability: f64,
    pub p_strategy: f64,
    pub p_no_cycles: f64,
    pub p_overhead: f64,
    pub p_total: f64,
    pub f_max: f64,
    pub score: f64,
}

/// Seller profit: every transferred kWh times a coefficient that depends on
/// whether the keyed endpoint finishes inside its stability band.
pub fn payoff(
    scenario: &Scenario,
    adjusted: &TradeMatrix,
    finals: &[f64],
    weights: &FitnessWeights,
) -> f64 {
    let n = scenario.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let amount = adjusted.get(i, j);
            if amount <= 0.0 {
                continue;
            }
            let keyed = match weights.payoff_keyed_to {
                PayoffKey::Buyer => j,
                PayoffKey::Seller => i,
            };
            let rate = if is_stable(&scenario.microgrids[keyed], finals[keyed]) {
                weights.payoff_stable
            } else {
                weights.payoff_other
            };
            total += amount * rate;
        }
    }
    total
}

/// Community bonus granted when a large share of microgrids end stable.
/// Tier comparisons are exact: `10*s >= 9*n` etc., no float rounding.
pub fn stability_bonus(stable_count: usize, n: usize) -> f64 {
    let s = stable_count as u64;
    let n64 = n as u64;
    let nf = n as f64;
    if 10 * s >= 9 * n64 {
        0.5 * nf
    } else if 10 * s >= 8 * n64 {
        0.3 * nf
    } else if 10 * s >= 7 * n64 {
        0.1 * nf
    } else {
        0.0
    }
}

/// Deviation of unstable microgrids from their band center, normalized by
/// capacity. Stable microgrids contribute nothing.
pub fn penalty_stability(scenario: &Scenario, finals: &[f64]) -> f64 {
    scenario
        .microgrids
        .iter()
        .zip(finals)
        .map(|(mg, &e)| {
            if is_stable(mg, e) {
                0.0
            } else {
                (e - (mg.bt + mg.st) / 2.0).abs() / mg.capacity
            }
        })
        .sum()
}

/// Penalizes dove sellers serving more distinct buyers than `n_max`.
pub fn penalty_strategy(
    scenario: &Scenario,
    adjusted: &TradeMatrix,
    weights: &FitnessWeights,
) -> f64 {
    let n = scenario.n();
    let n_max = weights.n_max;
    scenario
        .microgrids
        .iter()
        .filter(|mg| mg.role == Some(Role::DoveSeller))
        .map(|mg| {
            let partners = (0..n).filter(|&j| adjusted.get(mg.id, j) > 0.0).count();
            if partners > n_max {
                (partners - n_max) as f64 / n_max as f64
            } else {
                0.0
            }
        })
        .sum()
}

/// Battery wear of sellers under the equivalent-full-cycle model: energy
/// discharged over capacity gives cycles consumed, charged against the
/// battery's total cycle budget.
pub fn penalty_cycles(scenario: &Scenario, adjusted: &TradeMatrix) -> f64 {
    scenario
        .microgrids
        .iter()
        .filter(|mg| mg.is_seller())
        .map(|mg| {
            let cycles_consumed = adjusted.row_sum(mg.id) / mg.capacity;
            cycles_consumed / mg.cycles_max as f64
        })
        .sum()
}

/// Penalizes microgrids whose total traded energy exceeds the tolerated
/// fraction `mu` of the per-microgrid line limit.
pub fn penalty_overhead(
    scenario: &Scenario,
    adjusted: &TradeMatrix,
    weights: &FitnessWeights,
) -> f64 {
    let limit = scenario.line_limit;
    scenario
        .microgrids
        .iter()
        .map(|mg| {
            let traded = adjusted.row_sum(mg.id) + adjusted.col_sum(mg.id);
            if traded > weights.mu * limit {
                traded / limit
            } else {
                0.0
            }
        })
        .sum()
}

/// Theoretical fitness ceiling: every microgrid trades a full `thv` at the
/// stable payoff rate, everyone is stable, and the top bonus tier applies.
pub fn f_max(scenario: &Scenario, weights: &FitnessWeights) -> Result<f64> {
    let n = scenario.n();
    if n == 0 {
        return Err(Error::InvalidScenario(
            "cannot normalize over an empty community".into(),
        ));
    }
    let nf = n as f64;
    Ok(weights.alpha * nf * scenario.thv * weights.payoff_stable
        + weights.beta * nf
        + weights.gamma * 0.5 * nf)
}

/// Adjusts `trades`, settles them and returns the full scored breakdown.
pub fn evaluate(
    scenario: &Scenario,
    trades: &TradeMatrix,
    weights: &FitnessWeights,
    policy: SurplusFloorPolicy,
) -> Result<FitnessBreakdown> {
    let adjusted = adjust(scenario, trades, policy);
    let ceiling = f_max(scenario, weights)?;
    evaluate_adjusted(scenario, &adjusted, weights, ceiling)
}

/// Scores a matrix that is already adjusted; `ceiling` is `f_max` for the
/// same weights. Used by the optimizer to avoid re-deriving both per call.
pub fn evaluate_adjusted(
    scenario: &Scenario,
    adjusted: &TradeMatrix,
    weights: &FitnessWeights,
    ceiling: f64,
) -> Result<FitnessBreakdown> {
    let finals = settle(scenario, adjusted)?;
    let stable_count = scenario.stable_count(&finals);
    let payoff = payoff(scenario, adjusted, &finals, weights);
    let bonus = stability_bonus(stable_count, scenario.n());
    let p_stability = penalty_stability(scenario, &finals);
    let p_strategy = penalty_strategy(scenario, adjusted, weights);
    let p_no_cycles = penalty_cycles(scenario, adjusted);
    let p_overhead = penalty_overhead(scenario, adjusted, weights);
    let p_total = weights.w1 * p_stability
        + weights.w2 * p_strategy
        + weights.w3 * p_no_cycles
        + weights.w4 * p_overhead;
    let score = (weights.alpha * payoff + weights.beta * stable_count as f64
        + weights.gamma * bonus
        - weights.delta * p_total)
        / ceiling;
    Ok(FitnessBreakdown {
        payoff,
        stable_count,
        bonus,
        p_stability,
        p_strategy,
        p_no_cycles,
        p_overhead,
        p_total,
        f_max: ceiling,
        score,
    })
}
