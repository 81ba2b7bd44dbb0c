use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("step {step} out of range for trace of length {len}")]
    StepOutOfRange { step: usize, len: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("data does not match network: {0}")]
    DataMismatch(String),

    #[error("node `{0}` has no fitted conditional probability table")]
    Unfitted(String),

    #[error("encounter placement failed after {0} attempts")]
    PlacementFailed(usize),

    #[error("transition requested from a terminal state (tau = 0)")]
    TerminalState,

    #[error("value {value} is not a cut point of the {axis} axis")]
    OffGrid { axis: &'static str, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("advisory axes differ between value vectors")]
    AxisMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value produced during backward induction at tau = {tau}")]
    NumericOverflow { tau: usize },

    #[error("risk ratio undefined: insufficient unequipped NMACs (p_nmac = 0)")]
    InsufficientUnequippedNmacs,

    #[error("time step mismatch: expected {expected} s, found {found} s")]
    DtMismatch { expected: f64, found: f64 },

    #[error("coordination must be initiated by the leader (own id {own} >= intruder id {intruder})")]
    NotLeader { own: u32, intruder: u32 },

    #[error("cross-entropy elite set is empty ({n} samples, elite fraction {fraction})")]
    EmptyElite { n: usize, fraction: f64 },

    #[error("logic table format: {0}")]
    TableFormat(String),

    #[error("trace format, line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
