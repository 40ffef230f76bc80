use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no observation possible here: position ({x}, {y}) is outside every observation area")]
    NoObservationPossible { x: f64, y: f64 },

    #[error("impossible observation: observation {observation} has zero probability under the current belief")]
    ImpossibleObservation { observation: usize },

    #[error("cannot normalize a belief with zero total mass")]
    ZeroBelief,

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("observation areas unreachable: {found} of {requested} observation nodes after {iterations} iterations")]
    AreasUnreachable {
        requested: usize,
        found: usize,
        iterations: usize,
    },

    #[error("tree growth stalled: {found} of {requested} nodes after {iterations} iterations")]
    GrowthExhausted {
        requested: usize,
        found: usize,
        iterations: usize,
    },

    #[error("growth failed at depth {depth}, branch {branch:?}, agent {agent}: {source}")]
    Growth {
        depth: usize,
        branch: Vec<usize>,
        agent: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("plan integrity: {0}")]
    PlanIntegrity(String),

    #[error("instance too large for oracle: {0}")]
    OracleTooLarge(String),

    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
