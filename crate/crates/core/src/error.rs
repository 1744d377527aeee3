use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("measure has zero total mass")]
    ZeroMass,
    #[error("block {block} has zero base-measure mass")]
    ZeroMassBlock { block: usize },
    #[error("operands live on different state spaces")]
    SpaceMismatch,
    #[error("invalid state space: {0}")]
    InvalidSpace(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} = {value} is outside the supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },
    #[error("history of length {len} exceeds the coefficient horizon {horizon}")]
    HorizonExceeded { len: usize, horizon: usize },
    #[error("reinforcement rows do not share a common total mass")]
    NotConstantMass,
    #[error("degenerate coefficient recursion: {0}")]
    Degenerate(String),
    #[error("predictive mass is not a function of the block count: {0}")]
    NotSufficient(String),
    #[error("likelihood maximised at the {} bracket edge (theta = {theta})", if *.upper { "upper" } else { "lower" })]
    EdgeMaximum { theta: f64, upper: bool },
    #[error("likelihood is flat in theta over the bracket")]
    Flat,
    #[error("unsupported input: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range: range.to_string(),
        }
    }
}
