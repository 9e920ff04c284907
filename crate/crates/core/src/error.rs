use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("point lies outside the half-open unit cube partition on axis {axis}")]
    OutOfPartition { axis: usize },
    #[error("point lies outside the unit cube")]
    Domain,
    #[error("point lies on a face of the translated grid (axis {axis})")]
    Boundary { axis: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("dimension {0} exceeds the configured cap")]
    DimensionCap(usize),
    #[error("average over a set of zero measure")]
    ZeroMeasure,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resource cap exceeded: {what} needs {required} > cap {cap}")]
    ResourceCap {
        what: String,
        required: String,
        cap: String,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap_check(what: &str, required_log2: u64, cap_log2: u64) -> Result<()> {
    if required_log2 > cap_log2 {
        return Err(Error::ResourceCap {
            what: what.to_string(),
            required: format!("2^{required_log2}"),
            cap: format!("2^{cap_log2}"),
        });
    }
    Ok(())
}
