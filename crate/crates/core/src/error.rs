use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frame synchronization failed: correlation peak/median ratio {ratio:.2} below {required:.1}")]
    SyncFailure { ratio: f64, required: f64 },

    #[error("frame synchronization failed: peak at sample {offset} leaves less than one frame in the {record}-sample record")]
    SyncMisplaced { offset: usize, record: usize },

    #[error("truncated frame: need {needed} samples from offset, have {available}")]
    TruncatedFrame { needed: usize, available: usize },

    #[error("dead subcarriers (|tap| < 1e-12): {0:?}")]
    DeadSubcarriers(Vec<usize>),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("crosstalk BER floor: x*S = {xs:.3} >= 1, penalty unbounded")]
    BerFloor { xs: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors that come from the physics (sync loss, BER floor) rather than
    /// from bad input. The CLI maps these to exit code 2.
    pub fn is_link_failure(&self) -> bool {
        matches!(
            self,
            Error::SyncFailure { .. }
                | Error::SyncMisplaced { .. }
                | Error::BerFloor { .. }
                | Error::DeadSubcarriers(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
