use thiserror::Error;

use crate::timing::TimingReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("no set bits")]
    NoSetBits,

    #[error("pattern length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable feedback stage (|alpha| = {0} >= 1)")]
    UnstableFeedback(f64),

    #[error("feedback stage not representable in event domain")]
    NotEventRepresentable,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("periodogram is already a PSD")]
    AlreadyPsd,

    #[error("no local maximum in window around {0} GHz")]
    NoPeak(f64),

    #[error("frequency {0} GHz is not on the tone grid (spacing {1} GHz)")]
    OffGrid(f64, f64),

    #[error("objective undefined: {0}")]
    UndefinedObjective(String),

    #[error("write in read mode")]
    WriteInReadMode,

    #[error(
        "timing violation: {} cell(s) fail the hold check, {} the setup check",
        .0.race_violations.len(),
        .0.setup_violations.len()
    )]
    RaceViolation(Box<TimingReport>),
}
