use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("positive divergence: div a = {0} > 0")]
    PositiveDivergence(f64),

    #[error("malformed convection field: {0}")]
    MalformedConvection(String),

    #[error("invalid time partition: {0}")]
    InvalidPartition(String),

    #[error("size mismatch: expected {expected}, found {found} ({what})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("field does not vanish on the boundary: {0}")]
    BoundaryTrace(String),

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("division by vanishing delta")]
    VanishingDelta,

    #[error("jump-marked field passed where a conforming field is required")]
    JumpsNotAllowed,

    #[error("invalid jump: {0}")]
    InvalidJump(String),

    #[error("singular linear system: zero pivot at row {row}{}", .slab.map(|s| format!(" (slab {s})")).unwrap_or_default())]
    SingularSystem { row: usize, slab: Option<usize> },

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("field file: {0}")]
    FieldFormat(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
