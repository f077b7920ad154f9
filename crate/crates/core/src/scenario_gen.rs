//! Synthetic community generation.
//!
//! Builds heterogeneous communities: battery levels and cycle budgets drawn
//! uniformly, per-microgrid thresholds drawn as fractions of capacity, and a
//! controlled buyer share. The target number of buyers is met exactly by
//! marking the lowest-energy microgrids as buyers and rejection-sampling each
//! microgrid's threshold draw until it matches its side (deficit grids below
//! their buy threshold, the rest above it).

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Microgrid, Role, Scenario};
use crate::error::{Error, Result};

/// Rounds of threshold redraws allowed per microgrid before giving up.
const MAX_REJECTION_ROUNDS: usize = 10_000;

/// Recipe for one synthetic community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    /// Initial battery level range, kWh.
    pub energy_range: (f64, f64),
    /// Remaining charge/discharge cycles range.
    pub cycles_range: (u32, u32),
    /// Battery capacity range, kWh.
    pub capacity_range: (f64, f64),
    /// Buy threshold as a fraction of capacity.
    pub bt_fraction_range: (f64, f64),
    /// Sell threshold as a fraction of capacity.
    pub st_fraction_range: (f64, f64),
    /// Share of microgrids that start in deficit.
    pub target_buyer_fraction: f64,
    /// Per-interaction transfer cap of the generated scenario, kWh.
    pub thv: f64,
    /// Per-microgrid line limit of the generated scenario, kWh.
    pub line_limit: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n: 100,
            energy_range: (2.0, 12.0),
            cycles_range: (1000, 6000),
            capacity_range: (10.0, 15.0),
            bt_fraction_range: (0.30, 0.60),
            st_fraction_range: (0.65, 0.90),
            target_buyer_fraction: 0.56,
            thv: 5.0,
            line_limit: 10.0,
            seed: 120,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        let float_ranges = [
            ("energy_range", self.energy_range),
            ("capacity_range", self.capacity_range),
            ("bt_fraction_range", self.bt_fraction_range),
            ("st_fraction_range", self.st_fraction_range),
        ];
        for (name, (lo, hi)) in float_ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-empty interval, got ({lo}, {hi})"
                )));
            }
        }
        if self.energy_range.0 < 0.0 {
            return Err(Error::InvalidConfig("energy_range must be non-negative".into()));
        }
        if self.capacity_range.0 <= 0.0 {
            return Err(Error::InvalidConfig("capacity_range must be positive".into()));
        }
        for (name, (lo, hi)) in [
            ("bt_fraction_range", self.bt_fraction_range),
            ("st_fraction_range", self.st_fraction_range),
        ] {
            if lo <= 0.0 || hi > 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie inside (0, 1], got ({lo}, {hi})"
                )));
            }
        }
        if self.cycles_range.0 > self.cycles_range.1 || self.cycles_range.0 == 0 {
            return Err(Error::InvalidConfig(format!(
                "cycles_range must be a non-empty positive interval, got {:?}",
                self.cycles_range
            )));
        }
        if !(self.target_buyer_fraction > 0.0 && self.target_buyer_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_buyer_fraction must lie in (0, 1), got {}",
                self.target_buyer_fraction
            )));
        }
        if !(self.thv.is_finite() && self.thv > 0.0) {
            return Err(Error::InvalidConfig("thv must be positive".into()));
        }
        if !(self.line_limit.is_finite() && self.line_limit > 0.0) {
            return Err(Error::InvalidConfig("line_limit must be positive".into()));
        }
        Ok(())
    }

    /// Number of buyers the generated scenario will contain.
    pub fn buyer_count(&self) -> usize {
        ((self.target_buyer_fraction * self.n as f64).round() as usize).min(self.n)
    }
}

/// Generates a community deterministically from the spec's seed.
///
/// Deficit microgrids carry an explicit buyer role; the rest are left
/// unassigned so each run can decide seller strategies from its own seed.
pub fn generate(spec: &GenSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;

    let energy_dist = Uniform::new_inclusive(spec.energy_range.0, spec.energy_range.1);
    let cycles_dist = Uniform::new_inclusive(spec.cycles_range.0, spec.cycles_range.1);
    let capacity_dist = Uniform::new_inclusive(spec.capacity_range.0, spec.capacity_range.1);
    let bt_dist = Uniform::new_inclusive(spec.bt_fraction_range.0, spec.bt_fraction_range.1);
    let st_dist = Uniform::new_inclusive(spec.st_fraction_range.0, spec.st_fraction_range.1);

    let energies: Vec<f64> = (0..n).map(|_| energy_dist.sample(&mut rng)).collect();
    let cycles: Vec<u32> = (0..n).map(|_| cycles_dist.sample(&mut rng)).collect();

    // The k lowest-energy microgrids become buyers: deficit follows poverty.
    let mut by_energy: Vec<usize> = (0..n).collect();
    by_energy.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let mut is_buyer = vec![false; n];
    for &idx in by_energy.iter().take(spec.buyer_count()) {
        is_buyer[idx] = true;
    }

    let mut microgrids = Vec::with_capacity(n);
    for id in 0..n {
        let energy = energies[id];
        let mut accepted = None;
        for _ in 0..MAX_REJECTION_ROUNDS {
            let capacity = capacity_dist.sample(&mut rng);
            let bt = bt_dist.sample(&mut rng) * capacity;
            let st = st_dist.sample(&mut rng) * capacity;
            let side_ok = if is_buyer[id] {
                energy < bt
            } else {
                energy > bt
            };
            if capacity >= energy && bt < st && side_ok {
                accepted = Some((capacity, bt, st));
                break;
            }
        }
        let Some((capacity, bt, st)) = accepted else {
            return Err(Error::Generation(format!(
                "microgrid {id} (energy {energy:.3} kWh, {} side) found no admissible \
                 thresholds in {MAX_REJECTION_ROUNDS} draws; widen the capacity or \
                 threshold fraction ranges",
                if is_buyer[id] { "buyer" } else { "seller" }
            )));
        };
        microgrids.push(Microgrid {
            id,
            energy_initial: energy,
            bt,
            st,
            capacity,
            cycles_remaining: cycles[id],
            cycles_max: spec.cycles_range.1,
            role: if is_buyer[id] { Some(Role::Buyer) } else { None },
        });
    }

    let scenario = Scenario {
        microgrids,
        thv: spec.thv,
        line_limit: spec.line_limit,
    };
    scenario.validate()?;
    Ok(scenario)
}
