use thiserror::Error;

/// Errors produced by scenario construction, settlement and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("microgrid {id}: {reason}")]
    InvalidMicrogrid { id: usize, reason: String },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("microgrid {id} has no assigned role; assign roles before trading")]
    UnassignedRole { id: usize },

    #[error(
        "infeasible settlement: microgrid {id} final energy {energy} kWh outside [0, {capacity}]"
    )]
    InfeasibleSettlement {
        id: usize,
        energy: f64,
        capacity: f64,
    },

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("exhaustive search refused: {0}")]
    OracleRefused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
