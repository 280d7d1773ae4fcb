use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown level {value} for categorical field `{field}`")]
    UnknownLevel { field: &'static str, value: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidField {
        field: &'static str,
        reason: &'static str,
    },

    #[error("record is unlabeled; training and evaluation need post-reflow offsets")]
    Unlabeled,

    #[error("need at least {required} records, got {actual}")]
    TooFewRecords { required: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("truth values have zero variance; R^2 is undefined")]
    ZeroVariance,

    #[error("invalid configuration: {0}")]
    Config(&'static str),

    #[error("no feasible placement found after {attempts} draws (worst slack {worst_slack} on {constraint})")]
    Infeasible {
        attempts: usize,
        constraint: &'static str,
        worst_slack: f64,
    },
}
