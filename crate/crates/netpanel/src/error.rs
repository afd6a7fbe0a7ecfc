use thiserror::Error;

/// Errors surfaced by panel construction, statistic evaluation and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop not allowed: node {0}")]
    SelfLoop(usize),

    #[error("adjacency entry at ({row}, {col}) is {value}, expected 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },

    #[error("adjacency matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("wave {wave} has {got} nodes, expected {expected}")]
    WaveSizeMismatch {
        wave: usize,
        got: usize,
        expected: usize,
    },

    #[error("panel needs at least 2 waves, got {0}")]
    TooFewWaves(usize),

    #[error("wave index {wave} out of range (panel has {waves} waves)")]
    WaveOutOfRange { wave: usize, waves: usize },

    #[error("covariate `{0}` not found")]
    MissingCovariate(String),

    #[error("covariate `{name}` has length {got}, expected {expected}")]
    CovariateLength {
        name: String,
        got: usize,
        expected: usize,
    },

    #[error("covariate `{name}` is a {got} covariate, term needs a {expected} covariate")]
    CovariateKind {
        name: String,
        got: &'static str,
        expected: &'static str,
    },

    #[error("term `{0}` does not take a decay parameter")]
    DecayNotAllowed(String),

    #[error("term `{0}` requires an attribute name")]
    MissingAttr(String),

    #[error("term `{term}` cannot have binding {binding}")]
    InvalidBinding { term: String, binding: String },

    #[error("unknown term `{got}`; valid kinds: {valid}")]
    UnknownTerm { got: String, valid: String },

    #[error("nodes {i} and {j} must be distinct")]
    DiagonalDyad { i: usize, j: usize },

    #[error("node index {node} out of range for n={n}")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("networks have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("exact enumeration needs n <= 4, got n={0}")]
    TooLargeForExact(usize),

    #[error("max_bucket {max_bucket} pools distances but pooling is disabled (need >= {needed})")]
    BucketTooSmall { max_bucket: usize, needed: usize },

    #[error(
        "leakage: terms bound to test-wave information: {}; pass allow_leakage to override",
        terms.join(", ")
    )]
    Leakage { terms: Vec<String> },

    #[error("no simulated networks to score")]
    EmptySims,

    #[error("candidate differs from current outside actor {actor}'s outgoing ties")]
    InvalidCandidate { actor: usize },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("model spec parse error: {0}")]
    SpecParse(String),

    #[error("{file}: {message}")]
    DataFile { file: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
