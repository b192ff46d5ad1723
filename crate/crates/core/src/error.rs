use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate entry for item {item}, user {user}")]
    DuplicateEntry { item: usize, user: usize },
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("agreement statistics need two distinct users")]
    SameUser,
    #[error("pairwise comparison needs two distinct items")]
    SameItem,
    #[error("preference matrix is not antisymmetric at ({i}, {j})")]
    MalformedPreferenceMatrix { i: usize, j: usize },
    #[error("ranking for user {user} is not a permutation of 1..={n_items}")]
    NotAPermutation { user: usize, n_items: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fewer than two truth items with distinct ratings")]
    InsufficientPairs,
    #[error("all truth ratings are equal")]
    ConstantTruth,
    #[error("need at least {needed} truth items, got {available}")]
    InsufficientItems { needed: usize, available: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ratings file contains no entries")]
    EmptyFile,
    #[error("only {available} users qualify, {needed} requested")]
    NotEnoughQualifyingUsers { needed: usize, available: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::Parse { .. }
            | Error::EmptyFile
            | Error::NotEnoughQualifyingUsers { .. }
            | Error::DuplicateEntry { .. }
            | Error::IndexOutOfRange { .. }
            | Error::NotAPermutation { .. }
            | Error::ShapeMismatch(_)
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
