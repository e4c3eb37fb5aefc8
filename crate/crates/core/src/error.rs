use thiserror::Error;

/// Errors produced by basis construction, identification and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch in {op}: expected {expected}, found {found}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{op}: singular matrix ({detail})")]
    SingularMatrix { op: &'static str, detail: String },

    #[error("insufficient columns: a {q}-dimensional system needs at least {needed} columns, basis has {n}")]
    InsufficientColumns { q: usize, n: usize, needed: usize },

    #[error("reconstruction failure: {0}")]
    ReconstructionFailure(String),

    #[error("{op}: rank deficient, smallest/largest singular value ratio {ratio:.3e} below cutoff {rcond:.3e}")]
    RankDeficient {
        op: &'static str,
        ratio: f64,
        rcond: f64,
    },

    #[error("{op}: unsupported size N = {n} (maximum {max})")]
    UnsupportedSize {
        op: &'static str,
        n: usize,
        max: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the caller's
    /// arguments (singular systems, failed reconstructions, rank loss).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::InsufficientColumns { .. }
                | Error::ReconstructionFailure(_)
                | Error::RankDeficient { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_order(q: usize, n: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("basis order q must be at least 1".into()));
    }
    if q > n {
        return Err(Error::InvalidArgument(format!(
            "basis order q = {q} exceeds sample count N = {n}"
        )));
    }
    Ok(())
}
