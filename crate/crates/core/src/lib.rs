//! Decentralized peer-to-peer energy trading for communities of microgrids.
//!
//! Battery-backed microgrids clear energy trades for one time step: deficit
//! grids buy, surplus grids sell cautiously (dove) or aggressively (hawk),
//! and an elitist genetic search over dense trade matrices looks for the
//! allocation that stabilizes as much of the community as possible while
//! accounting for seller profit, battery wear and line load.
//!
//! The crate is organized around the pipeline:
//!
//! * [`scenario_gen`] builds synthetic communities;
//! * [`domain`] defines roles, stability bands and settlement;
//! * [`genome`] holds the trade-matrix individual and its feasibility
//!   adjustment;
//! * [`fitness`] scores adjusted matrices;
//! * [`evolution`] runs the seeded, bit-reproducible genetic search;
//! * [`oracle`] exhaustively solves tiny instances for validation.

pub mod domain;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod genome;
pub mod oracle;
pub mod scenario_gen;

pub use domain::{
    buy_requirement, classify_role, is_stable, sell_capacity, settle, Microgrid, Role, Scenario,
    SurplusFloorPolicy,
};
pub use error::{Error, Result};
pub use evolution::{
    crossover, diversity, evolve, evolve_from, exploration_split, initial_population,
    mutation_rate, EvolveResult, GaConfig, GenerationStats,
};
pub use fitness::{evaluate, f_max, stability_bonus, FitnessBreakdown, FitnessWeights, PayoffKey};
pub use genome::{adjust, clamp, random_individual, TradeMatrix, ValidityMask};
pub use oracle::{exhaustive_best, OracleSpec};
pub use scenario_gen::{generate, GenSpec};
