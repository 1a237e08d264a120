use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid action profile: {0}")]
    InvalidProfile(String),

    #[error("probing set of size {size} exceeds probe budget {budget}")]
    ProbeBudgetExceeded { size: usize, budget: usize },

    #[error("exact expectation needs {outcomes} joint outcomes, limit is {limit}; use Monte Carlo evaluation")]
    SupportTooLarge { outcomes: u128, limit: u128 },

    #[error("exhaustive probing oracle infeasible for {arms} arms (limit {limit}); use Monte Carlo scoring or fewer arms")]
    OracleInfeasible { arms: usize, limit: usize },

    #[error("confidence parameter delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("missing column `{0}` in trip table")]
    MissingColumn(String),

    #[error("need {needed} grid cells but only {available} are populated")]
    NotEnoughCells { needed: usize, available: usize },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
