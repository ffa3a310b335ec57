use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unparseable name: {0:?}")]
    UnparseableName(String),

    #[error("soundex requires at least one ASCII letter, got {0:?}")]
    SoundexNoLetters(String),

    #[error("initialization degenerate: {0}")]
    InitializationDegenerate(String),

    #[error("EM degenerate: lambda collapsed to {0}")]
    EmDegenerate(f64),

    #[error("unknown state for fips {0:?}")]
    UnknownState(String),

    #[error("no calendar entry for state {0:?}")]
    MissingCalendar(String),

    #[error("rank deficiency: collinear columns {0:?}")]
    RankDeficient(Vec<String>),

    #[error("cluster dimension {0} has a single cluster")]
    SingleCluster(usize),

    #[error("singular sub-vcov in joint Wald test")]
    SingularVcov,

    #[error("demeaning failed to converge after {0} sweeps")]
    DemeanDiverged(usize),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("infeasible synthetic config: {0}")]
    InfeasibleConfig(String),

    #[error("instance too large for brute force: {0} x {1}")]
    BruteForceTooLarge(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
