use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate register label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown register label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("eigenvalue {0:.3e} is below the clamp threshold")]
    NegativeEigenvalue(f64),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("bipartition has an empty side")]
    EmptyCut,

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("locality violation: {0}")]
    Locality(String),

    #[error("branch enumeration exceeded the limit of {0} leaves")]
    BranchLimit(usize),

    #[error("resource budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("channel is not CPTP: {0}")]
    NotCptp(String),

    #[error("Cesaro average did not converge after {0} terms")]
    NoConvergence(u64),

    #[error("typical set is empty (n = {n}, delta = {delta})")]
    EmptyTypicalSet { n: usize, delta: f64 },

    #[error("n = {n} exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(name: &'static str, value: f64, ok: bool, range: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
