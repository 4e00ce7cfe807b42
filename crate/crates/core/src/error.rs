use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty cell {cell}: zero count with no smoothing")]
    EmptyCell { cell: String },

    #[error("bad code in {field}: level {level} outside 0..{cardinality}")]
    BadCode {
        field: &'static str,
        level: usize,
        cardinality: usize,
    },

    #[error("distribution at {path} sums to {sum}, not 1")]
    NotNormalized { path: String, sum: f64 },

    #[error("value {value} at {path} is not a valid probability")]
    OutOfRangeProbability { path: String, value: f64 },

    #[error("zero denominator in {0}")]
    ZeroDenominator(String),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("bad target effect {0}: must be positive")]
    BadTarget(f64),

    #[error("infeasible log-linear model: {0}")]
    InfeasibleModel(String),

    #[error("zero probability at {0}")]
    ZeroProbability(String),

    #[error("unreachable cell a={a}, m={m}: pr(m | a) = 0")]
    UnreachableCell { a: usize, m: usize },

    #[error("operation requires A independent of U given C")]
    RequiresIndependence,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("malformed model: {0}")]
    Shape(String),
}
