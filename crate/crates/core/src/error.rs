use thiserror::Error;

/// Errors raised by the partition, measure, process and expectation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("blocks overlap at site(s) {0}")]
    Overlap(String),

    #[error("partition contains an empty block")]
    EmptyBlock,

    #[error("site {0} is out of range (sites are numbered 1..=64)")]
    InvalidSite(usize),

    #[error("ground sets differ: {{{left}}} vs {{{right}}}")]
    GroundMismatch { left: String, right: String },

    #[error("{{{sub}}} is not a subset of {{{sup}}}")]
    NotSubset { sub: String, sup: String },

    #[error("{finer} does not refine {coarser}")]
    NotComparable { finer: String, coarser: String },

    #[error("{what} has size {size}, exceeding the cap of {cap}; {hint}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("{0} is not an ordered partition into at most two parts")]
    NotOrderedPartition(String),

    #[error("operation is undefined on the zero measure")]
    ZeroMeasure,

    #[error("cannot draw {blocks} distinct individuals from a population of {individuals}")]
    SampleTooLarge { blocks: usize, individuals: usize },

    #[error("weight at type {type_index} would become negative")]
    NegativeWeight { type_index: usize },

    #[error("measure is not a nonnegative counting measure: {0}")]
    NotCounting(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid initial state: {0}")]
    InvalidInitial(String),

    #[error("invalid recombination parameters: {0}")]
    InvalidDistribution(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
