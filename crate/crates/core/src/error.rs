use std::path::PathBuf;

use thiserror::Error;

use crate::lattice::WaveIndex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation bound must be positive, got {0}")]
    InvalidTruncation(i64),

    #[error("mode ({}, {}) lies outside the lattice |n|,|m| <= {bound}", .mode.n, .mode.m)]
    ModeOutOfRange { mode: WaveIndex, bound: usize },

    #[error("lattice mismatch: expected N = {expected}, got N = {found}")]
    LatticeMismatch { expected: usize, found: usize },

    #[error("dependent component {component} at ({}, {}) is inconsistent with incompressibility", .mode.n, .mode.m)]
    InconsistentDependent { mode: WaveIndex, component: Component },

    #[error("duplicate entry for component {component} at ({}, {})", .mode.n, .mode.m)]
    DuplicateEntry { mode: WaveIndex, component: Component },

    #[error("state violates Hermitian symmetry by {deviation:e} (tolerance {tolerance:e})")]
    RealityViolated { deviation: f64, tolerance: f64 },

    #[error("state violates incompressibility closure at ({}, {})", .mode.n, .mode.m)]
    DivergenceViolated { mode: WaveIndex },

    #[error("mean mode (0, 0) has no projected right-hand side")]
    MeanMode,

    #[error("order {requested} requested but table only holds orders 0..={available}")]
    OrderUnavailable { requested: usize, available: usize },

    #[error("non-finite coefficient produced at order {order}")]
    NonFinite { order: usize },

    #[error("oracle blowup at step {step}")]
    OracleBlowup { step: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("trace holds orders 0..={p_max}, classification window needs at least {required}")]
    TraceTooShort { p_max: usize, required: usize },

    #[error("runs are not comparable: {0}")]
    Incomparable(String),

    #[error("invalid table dump: {0}")]
    InvalidDump(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Velocity component tag: `C` holds x-velocity coefficients, `D` y-velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Component {
    C,
    D,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Component::C => f.write_str("C"),
            Component::D => f.write_str("D"),
        }
    }
}
