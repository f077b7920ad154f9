//! Exhaustive reference optimizer for tiny communities.
//!
//! Enumerates every trade matrix whose valid entries lie on a fixed kWh grid,
//! scores each one through the same adjust-settle-evaluate pipeline as the
//! evolutionary search, and returns the argmax. Used to check how close the
//! search gets to the true optimum on instances small enough to enumerate.

use crate::domain::{Scenario, SurplusFloorPolicy};
use crate::error::{Error, Result};
use crate::fitness::{evaluate_adjusted, f_max, FitnessBreakdown, FitnessWeights};
use crate::genome::{adjust_with_mask, TradeMatrix, ValidityMask};

/// Hard ceiling on the number of grid points enumerated in one call.
const MAX_COMBINATIONS: u128 = 100_000_000;

/// Discretization of the exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    /// Grid step for each valid matrix entry, kWh.
    pub grid_step: f64,
    /// Refuse instances with more valid positions than this.
    pub max_cells: usize,
}

impl OracleSpec {
    /// Default discretization: an eighth of the per-interaction cap, at most
    /// six enumerated cells.
    pub fn for_thv(thv: f64) -> Self {
        OracleSpec {
            grid_step: thv / 8.0,
            max_cells: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid_step must be positive, got {}",
                self.grid_step
            )));
        }
        if self.max_cells == 0 {
            return Err(Error::InvalidConfig("max_cells must be at least 1".into()));
        }
        Ok(())
    }
}

/// Enumerates the grid `{0, step, 2*step, ..., thv}` over every valid
/// position and returns the best-scoring matrix with its breakdown.
///
/// Ties keep the first matrix in lexicographic enumeration order. Instances
/// with more valid positions than `spec.max_cells` are refused.
pub fn exhaustive_best(
    scenario: &Scenario,
    spec: &OracleSpec,
    weights: &FitnessWeights,
    policy: SurplusFloorPolicy,
) -> Result<(TradeMatrix, FitnessBreakdown)> {
    scenario.validate()?;
    spec.validate()?;
    if let Some(id) = scenario.first_unassigned() {
        return Err(Error::UnassignedRole { id });
    }
    let mask = ValidityMask::from_scenario(scenario);
    let cells = mask.pairs();
    if cells.len() > spec.max_cells {
        return Err(Error::OracleRefused(format!(
            "{} valid positions exceed the limit of {}",
            cells.len(),
            spec.max_cells
        )));
    }

    let mut levels: Vec<f64> = Vec::new();
    let mut k = 0u32;
    loop {
        let v = f64::from(k) * spec.grid_step;
        if v > scenario.thv * (1.0 + 1e-12) {
            break;
        }
        levels.push(v.min(scenario.thv));
        k += 1;
    }
    if *levels.last().unwrap() < scenario.thv - 1e-12 * scenario.thv.max(1.0) {
        levels.push(scenario.thv);
    }

    let combos = (levels.len() as u128)
        .checked_pow(cells.len() as u32)
        .unwrap_or(u128::MAX);
    if combos > MAX_COMBINATIONS {
        return Err(Error::OracleRefused(format!(
            "{} grid levels over {} cells is {combos} combinations, above the \
             enumeration budget",
            levels.len(),
            cells.len()
        )));
    }

    let ceiling = f_max(scenario, weights)?;
    let mut counters = vec![0usize; cells.len()];
    let mut proposal = TradeMatrix::zeros(scenario.n());
    let mut best: Option<(TradeMatrix, FitnessBreakdown)> = None;
    loop {
        for (slot, &(i, j)) in counters.iter().zip(cells) {
            proposal.set(i, j, levels[*slot]);
        }
        let adjusted = adjust_with_mask(scenario, &mask, &proposal, policy);
        let fit = evaluate_adjusted(scenario, &adjusted, weights, ceiling)?;
        let better = match &best {
            None => true,
            Some((_, incumbent)) => fit.score > incumbent.score,
        };
        if better {
            best = Some((adjusted, fit));
        }

        // Odometer increment, last cell fastest: lexicographic order over
        // the leading cells.
        let mut pos = cells.len();
        loop {
            if pos == 0 {
                return Ok(best.expect("at least the all-zero matrix was scored"));
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < levels.len() {
                break;
            }
            counters[pos] = 0;
        }
    }
}
