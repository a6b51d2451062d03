use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "no Maclaurin truncation of degree <= {max_degree} reaches additive error {eps:e} on [0, {interval}]"
    )]
    DegreeCapExceeded {
        max_degree: usize,
        interval: f64,
        eps: f64,
    },

    #[error("polynomial certification failed: observed {observed:e} > bound {bound:e}")]
    CertificationFailed { observed: f64, bound: f64 },

    #[error("feature rank C({d}+{g}, {g}) exceeds 2^31; use a smaller degree or dimension")]
    RankOverflow { d: usize, g: usize },

    #[error(
        "feature matrices need {n} x {rank} entries, over the budget of {budget}; \
         lower the accuracy, the entry bound or the dimension"
    )]
    FeatureBudgetExceeded { n: usize, rank: usize, budget: usize },

    #[error("low-rank row-sum nonpositive at row {row}: {value:e}")]
    NonPositiveRowSum { row: usize, value: f64 },

    #[error("{which} has entry magnitude {norm} above the bound {bound}")]
    EntryBound {
        which: &'static str,
        norm: f64,
        bound: f64,
    },

    #[error("coordinate {coord} of point {point} is {value}, expected 0 or 1")]
    NonBinary {
        point: usize,
        coord: usize,
        value: u8,
    },

    #[error(
        "Hamming-ball enumeration needs {work} steps, over the budget of {budget}; \
         use the attention path"
    )]
    BruteForceBudget { work: u128, budget: u128 },

    #[error("reduction cannot be built: {0}")]
    Reduction(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
