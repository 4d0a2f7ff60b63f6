use thiserror::Error;

/// Errors produced by graph ingestion, validation, and analysis.
///
/// The CLI maps these onto exit codes: everything here except
/// [`Error::Internal`] is an input error (exit code 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("unknown vertex `{vertex}` referenced by edge `{edge}`")]
    UnknownVertex { edge: String, vertex: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("metric axiom violation: {0}")]
    MetricViolation(String),

    #[error("function defined over a different graph ({expected} {kind} expected, got {got})")]
    MismatchedGraph {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("vector indexed by {got} vertices but the tree has {expected}")]
    IndexMismatch { expected: usize, got: usize },

    #[error("not a directed tree: {0}")]
    NotATree(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("discretizer rejected input: {0}")]
    Discretize(String),

    #[error("path is not composable: {0}")]
    NotComposable(String),

    #[error("gauge parameter must lie on the unit circle, |z| = {0}")]
    NotUnitModulus(f64),

    #[error("{0} is supported outside the regular vertices: covariance is unavailable at `{1}`")]
    NotRegularlySupported(&'static str, String),

    #[error("map is not surjective: `{0}` has no preimage")]
    NotSurjective(String),

    #[error("metric not normalized: diameter {0} exceeds 1")]
    UnnormalizedMetric(f64),

    #[error("source map is not injective: edges `{0}` and `{1}` share a source")]
    SourceNotInjective(String, String),

    #[error("graph has a sink at `{0}`")]
    SinkPresent(String),

    #[error("no epsilon values requested and exact mode disabled")]
    EmptyEpsList,

    #[error("internal invariant failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
