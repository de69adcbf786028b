use thiserror::Error;

/// Errors surfaced by parsing, solving, and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spec parse error: {0}")]
    Parse(String),

    #[error("unknown reference: {kind} `{id}`")]
    UnknownReference { kind: &'static str, id: String },

    #[error("duplicate id: {kind} `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("spec failed validation:\n{0}")]
    Invalid(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("declared chains do not match derived chains: {0}")]
    ChainMismatch(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("allocation matrix is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("infeasible even after relaxing soft bounds by the x{cap} cap")]
    InfeasibleAfterRelaxation { cap: f64 },

    #[error("schedule does not cover subchain `{0}`")]
    ScheduleMismatch(String),

    #[error("simulation invariant breached: {0}")]
    SimInvariant(String),

    #[error("unknown baseline `{0}`")]
    UnknownBaseline(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
