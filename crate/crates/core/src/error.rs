use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field order q={0}; supported orders are 2, 3, 4, 5, 7, 8, 9")]
    UnsupportedField(u32),

    #[error("element {element} is not in F_{q}")]
    InvalidElement { element: u32, q: u8 },

    #[error("division by zero in F_{0}")]
    DivisionByZero(u8),

    #[error("ambient mismatch: expected F_{expected_q}^{expected_n}, found F_{found_q}^{found_n}")]
    AmbientMismatch {
        expected_q: u8,
        expected_n: usize,
        found_q: u8,
        found_n: usize,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("capacity exceeded: {what} needs {needed}, limit is {limit}")]
    Capacity { what: String, needed: u128, limit: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn capacity(what: impl Into<String>, needed: u128, limit: u128) -> Self {
        Error::Capacity {
            what: what.into(),
            needed,
            limit,
        }
    }
}
