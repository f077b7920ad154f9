//! Community model: microgrids, trading roles, stability bands and settlement.
//!
//! A community is a set of battery-backed microgrids that clear energy trades
//! for a single time step. Each microgrid has a buy threshold `bt` and a sell
//! threshold `st`; the closed interval `[bt, st]` is its stability band. A
//! microgrid below `bt` is a buyer; one above `bt` may sell, cautiously (dove)
//! or aggressively above `st` (hawk).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::TradeMatrix;

/// Absolute slack allowed on settlement bounds checks, per microgrid.
pub const SETTLE_TOLERANCE: f64 = 1e-9;

/// Trading role adopted by a microgrid for one clearing episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Sells aggressively; active only above the sell threshold.
    HawkSeller,
    /// Sells cautiously; active above the buy threshold.
    DoveSeller,
    /// In deficit; buys to reach its stability band.
    Buyer,
    /// Takes no part in trading this episode.
    Inactive,
}

impl Role {
    pub fn is_seller(self) -> bool {
        matches!(self, Role::HawkSeller | Role::DoveSeller)
    }

    pub fn is_buyer(self) -> bool {
        self == Role::Buyer
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::HawkSeller => "hawk_seller",
            Role::DoveSeller => "dove_seller",
            Role::Buyer => "buyer",
            Role::Inactive => "inactive",
        }
    }
}

/// Battery level a seller may discharge down to while trading.
///
/// `BuyThreshold` is the default: it lets dove sellers (active anywhere above
/// `bt`) actually trade and guarantees sellers finish inside their stability
/// band. `SellThreshold` restricts the surplus to energy above `st`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurplusFloorPolicy {
    #[default]
    BuyThreshold,
    SellThreshold,
}

/// One battery-backed agent: state of charge, thresholds and cycle budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Microgrid {
    pub id: usize,
    /// Battery level before trading, kWh.
    pub energy_initial: f64,
    /// Buy threshold, kWh.
    pub bt: f64,
    /// Sell threshold, kWh.
    pub st: f64,
    /// Battery capacity, kWh.
    pub capacity: f64,
    /// Charge/discharge cycles left before trading.
    pub cycles_remaining: u32,
    /// Cycle budget of a fresh battery.
    pub cycles_max: u32,
    /// `None` until the episode's role assignment has run.
    pub role: Option<Role>,
}

impl Microgrid {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidMicrogrid {
            id: self.id,
            reason,
        };
        for (name, v) in [
            ("energy", self.energy_initial),
            ("bt", self.bt),
            ("st", self.st),
            ("capacity", self.capacity),
        ] {
            if !v.is_finite() {
                return Err(fail(format!("{name} is not finite")));
            }
        }
        if !(0.0 <= self.bt && self.bt <= self.st && self.st <= self.capacity) {
            return Err(fail(format!(
                "thresholds must satisfy 0 <= bt <= st <= capacity, got bt={}, st={}, capacity={}",
                self.bt, self.st, self.capacity
            )));
        }
        if !(0.0 <= self.energy_initial && self.energy_initial <= self.capacity) {
            return Err(fail(format!(
                "energy {} outside [0, {}]",
                self.energy_initial, self.capacity
            )));
        }
        if self.cycles_max == 0 {
            return Err(fail("cycles_max must be at least 1".into()));
        }
        if self.cycles_remaining > self.cycles_max {
            return Err(fail(format!(
                "cycles_remaining {} exceeds cycles_max {}",
                self.cycles_remaining, self.cycles_max
            )));
        }
        // An explicit role must be consistent with the energy level.
        match self.role {
            Some(Role::HawkSeller) if self.energy_initial <= self.st => Err(fail(format!(
                "hawk seller requires energy > st, got energy={} st={}",
                self.energy_initial, self.st
            ))),
            Some(Role::DoveSeller) if self.energy_initial <= self.bt => Err(fail(format!(
                "dove seller requires energy > bt, got energy={} bt={}",
                self.energy_initial, self.bt
            ))),
            Some(Role::Buyer) if self.energy_initial >= self.bt => Err(fail(format!(
                "buyer requires energy < bt, got energy={} bt={}",
                self.energy_initial, self.bt
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_seller(&self) -> bool {
        self.role.is_some_and(Role::is_seller)
    }

    pub fn is_buyer(&self) -> bool {
        self.role.is_some_and(Role::is_buyer)
    }
}

/// The community: an ordered list of microgrids plus global trading limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub microgrids: Vec<Microgrid>,
    /// Cap on the energy moved in a single seller-buyer interaction, kWh.
    pub thv: f64,
    /// Maximum total traded energy per microgrid before line overload, kWh.
    pub line_limit: f64,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.microgrids.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.microgrids.is_empty() {
            return Err(Error::InvalidScenario("no microgrids".into()));
        }
        if !(self.thv.is_finite() && self.thv > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "thv must be positive, got {}",
                self.thv
            )));
        }
        if !(self.line_limit.is_finite() && self.line_limit > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "line_limit must be positive, got {}",
                self.line_limit
            )));
        }
        for (idx, mg) in self.microgrids.iter().enumerate() {
            if mg.id != idx {
                return Err(Error::InvalidScenario(format!(
                    "ids must be 0..n-1 in order; position {idx} holds id {}",
                    mg.id
                )));
            }
            mg.validate()?;
        }
        Ok(())
    }

    pub fn roles_assigned(&self) -> bool {
        self.microgrids.iter().all(|m| m.role.is_some())
    }

    /// First microgrid without a role, if any.
    pub fn first_unassigned(&self) -> Option<usize> {
        self.microgrids.iter().position(|m| m.role.is_none())
    }

    /// Classifies every microgrid that does not yet have a role.
    ///
    /// One fair coin is consumed per potential seller (energy above `bt`), in
    /// id order, deciding hawk versus dove. Explicit roles are left untouched,
    /// so a scenario loaded with roles replays identically across seeds.
    pub fn assign_roles<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        for mg in &mut self.microgrids {
            if mg.role.is_some() {
                continue;
            }
            let hawk = if mg.energy_initial > mg.bt {
                rng.gen::<bool>()
            } else {
                false
            };
            mg.role = Some(classify_role(mg, hawk)?);
        }
        Ok(())
    }

    /// Number of microgrids whose given energy sits inside their band.
    pub fn stable_count(&self, energies: &[f64]) -> usize {
        self.microgrids
            .iter()
            .zip(energies)
            .filter(|(mg, &e)| is_stable(mg, e))
            .count()
    }
}

/// Decides the role a microgrid plays this episode from its energy level.
///
/// `hawk_assignment` is the coin-flip outcome for potential sellers: hawks
/// only activate above `st`, doves anywhere above `bt`. Deficit microgrids
/// are always buyers.
pub fn classify_role(mg: &Microgrid, hawk_assignment: bool) -> Result<Role> {
    if mg.bt > mg.st {
        return Err(Error::InvalidMicrogrid {
            id: mg.id,
            reason: format!("thresholds out of order: bt={} > st={}", mg.bt, mg.st),
        });
    }
    let e = mg.energy_initial;
    if e < mg.bt {
        Ok(Role::Buyer)
    } else if e > mg.bt {
        if hawk_assignment {
            if e > mg.st {
                Ok(Role::HawkSeller)
            } else {
                Ok(Role::Inactive)
            }
        } else {
            Ok(Role::DoveSeller)
        }
    } else {
        Ok(Role::Inactive)
    }
}

/// True iff `energy` lies in the closed stability band `[bt, st]`.
pub fn is_stable(mg: &Microgrid, energy: f64) -> bool {
    mg.bt <= energy && energy <= mg.st
}

/// Energy a seller may offer: its level above the policy floor, never
/// negative. Non-sellers have no sale capacity.
pub fn sell_capacity(mg: &Microgrid, policy: SurplusFloorPolicy) -> f64 {
    if !mg.is_seller() {
        return 0.0;
    }
    let floor = match policy {
        SurplusFloorPolicy::BuyThreshold => mg.bt,
        SurplusFloorPolicy::SellThreshold => mg.st,
    };
    (mg.energy_initial - floor).max(0.0)
}

/// Energy a buyer needs to climb back to its buy threshold.
pub fn buy_requirement(mg: &Microgrid) -> f64 {
    if !mg.is_buyer() {
        return 0.0;
    }
    (mg.bt - mg.energy_initial).max(0.0)
}

/// Applies adjusted trades to battery levels.
///
/// Sellers lose their row sum, buyers gain their column sum, everyone else is
/// untouched. Fails if any final level leaves `[0, capacity]`, which signals
/// that `trades` was not adjusted first.
pub fn settle(scenario: &Scenario, trades: &TradeMatrix) -> Result<Vec<f64>> {
    let n = scenario.n();
    if trades.n() != n {
        return Err(Error::InvalidScenario(format!(
            "trade matrix is {}x{} but scenario has {} microgrids",
            trades.n(),
            trades.n(),
            n
        )));
    }
    let finals: Vec<f64> = scenario
        .microgrids
        .iter()
        .map(|mg| match mg.role {
            Some(r) if r.is_seller() => mg.energy_initial - trades.row_sum(mg.id),
            Some(Role::Buyer) => mg.energy_initial + trades.col_sum(mg.id),
            _ => mg.energy_initial,
        })
        .collect();
    for (mg, &e) in scenario.microgrids.iter().zip(&finals) {
        if e < -SETTLE_TOLERANCE || e > mg.capacity + SETTLE_TOLERANCE {
            return Err(Error::InfeasibleSettlement {
                id: mg.id,
                energy: e,
                capacity: mg.capacity,
            });
        }
    }
    Ok(finals)
}
