use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by loading, querying and clustering.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{relation} row {row} col {column}: cannot parse {value:?} as a finite number")]
    Parse {
        relation: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("join tree edges do not form a spanning tree: {0}")]
    NotATree(String),

    #[error("cyclic query: relations containing attribute {attribute} are not connected in the join tree")]
    CyclicQuery { attribute: String },

    #[error("box has {got} dimensions, expected {expected}")]
    BoxArity { expected: usize, got: usize },

    #[error("box literal: {0}")]
    BoxLiteral(String),

    #[error("cannot sample from an empty range")]
    EmptyRange,

    #[error("the join result is empty")]
    EmptyJoin,

    #[error("no active points remain")]
    EmptyActiveSet,

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("internal geometry invariant violated: {0}")]
    InternalGeometry(String),

    #[error("node {0} is a leaf and cannot be expanded")]
    ExpandOnLeaf(usize),

    #[error("snapshot token does not belong to this tree or was already released")]
    Token,

    #[error("rank {rank} out of range 1..={max}")]
    Rank { rank: u64, max: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("every join result is already selected")]
    NoCandidate,

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("sample {0:?} is not in the declared support")]
    ForeignSample(Vec<f64>),

    #[error("join count overflows 64 bits")]
    CountOverflow,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
