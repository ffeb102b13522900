use std::fmt;

use crate::cycles::TwoCycleSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid sub-permutation: {0}")]
    InvalidPermutation(String),

    #[error("location {location} out of range for {n} locations")]
    LocationOutOfRange { location: usize, n: usize },

    #[error("cycle set is not disjoint: location {location} appears twice")]
    NotDisjoint { location: usize },

    #[error("invalid sub-problem index: {0}")]
    InvalidIndex(String),

    #[error(
        "no legal cycle set with {wanted} cycles after {attempts} attempts (best found {})",
        partial.len()
    )]
    InfeasibleCycleSet {
        wanted: usize,
        attempts: usize,
        partial: TwoCycleSet,
    },

    #[error("no legal initial placement found after {attempts} attempts")]
    InfeasibleInit { attempts: usize },

    #[error("{facilities} facilities cannot be placed on {locations} locations")]
    TooManyFacilities { facilities: usize, locations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exhaustive solver limited to {max} variables, problem has {dim}")]
    ExhaustiveTooLarge { dim: usize, max: usize },

    #[error("external solver failed ({status}): {stderr}")]
    ExternalFailure { status: String, stderr: String },

    #[error("external solver exceeded time limit of {limit_ms} ms")]
    ExternalTimeout { limit_ms: u64 },

    #[error("malformed external solver output: {0}")]
    ExternalMalformed(String),

    #[error("external solver reported objective {reported} but x evaluates to {actual}")]
    ObjectiveMismatch { reported: f64, actual: f64 },

    #[error("netlist: {0}")]
    Netlist(NetlistError),

    #[error("architecture: {0}")]
    Architecture(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Schema violations found while validating a netlist document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetlistError {
    DuplicateBlock(String),
    UnknownBlock { net: usize, id: String },
    ShortNet { net: usize },
    UnknownType { id: String, ty: String },
    RegisterBlock(String),
    UnknownPinBlock(String),
    PinOutOfRange { id: String, row: usize, col: usize },
    PinIncompatible { id: String, row: usize, col: usize },
    PinCollision { first: String, second: String },
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DuplicateBlock(id) => write!(f, "duplicate block id `{id}`"),
            Self::UnknownBlock { net, id } => {
                write!(f, "nets[{net}] references unknown block `{id}`")
            }
            Self::ShortNet { net } => write!(f, "nets[{net}] needs at least 2 distinct blocks"),
            Self::UnknownType { id, ty } => {
                write!(f, "block `{id}` has unknown type `{ty}` (expected IO, BRAM or LUT)")
            }
            Self::RegisterBlock(id) => write!(
                f,
                "block `{id}` is a register; merge registers into their driving LUT before placement"
            ),
            Self::UnknownPinBlock(id) => write!(f, "pins references unknown block `{id}`"),
            Self::PinOutOfRange { id, row, col } => {
                write!(f, "pin of `{id}` at ({row}, {col}) lies outside the grid")
            }
            Self::PinIncompatible { id, row, col } => {
                write!(f, "pin of `{id}` at ({row}, {col}) has an incompatible cell type")
            }
            Self::PinCollision { first, second } => {
                write!(f, "blocks `{first}` and `{second}` are pinned to the same cell")
            }
        }
    }
}

impl From<NetlistError> for Error {
    fn from(e: NetlistError) -> Self {
        Error::Netlist(e)
    }
}
