use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initialization failed: {0}")]
    InitFailure(String),

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("exhaustive search limited to m <= {max}, got m = {m}")]
    TooLarge { m: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { line, kind }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numerical procedure rather than by its input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::InitFailure(_) | Error::NonFinite(_) | Error::ZeroVector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingHeader,
    Malformed(String),
    IndexOutOfBounds { what: &'static str, index: usize, bound: usize },
    DuplicateEntry { snp: usize, read: usize },
    InvalidAllele(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MissingHeader => write!(f, "missing `m n` header line"),
            ParseErrorKind::Malformed(msg) => write!(f, "malformed line: {msg}"),
            ParseErrorKind::IndexOutOfBounds { what, index, bound } => {
                write!(f, "index out of bounds: {what} index {index} not in 1..={bound}")
            }
            ParseErrorKind::DuplicateEntry { snp, read } => {
                write!(f, "duplicate entry for SNP {snp} in read {read}")
            }
            ParseErrorKind::InvalidAllele(tok) => {
                write!(f, "allele `{tok}` is not 0 or 1")
            }
        }
    }
}
