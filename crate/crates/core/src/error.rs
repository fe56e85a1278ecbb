use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("branch {from}-{to} has non-positive reactance {x}")]
    NonPositiveReactance { from: String, to: String, x: f64 },
    #[error("bus {bus} has non-positive Thevenin reactance {x}")]
    NonPositiveTheveninReactance { bus: String, x: f64 },
    #[error("buses {buses:?} have no path to ground")]
    DisconnectedFromGround { buses: Vec<String> },
    #[error("duplicate bus id {0}")]
    DuplicateBus(String),
    #[error("unknown bus id {0}")]
    UnknownBus(String),
    #[error("branch connects bus {0} to itself")]
    SelfLoop(String),
    #[error("network has no buses")]
    EmptyNetwork,
    #[error("bus {0} carries a converter and cannot be eliminated")]
    EliminatingConverterBus(String),
    #[error("bus {0} has no converter; eliminate it before analysis")]
    MissingConverter(String),
    #[error("eliminated block is numerically singular")]
    SingularInteriorBlock,
    #[error("bus {bus} has non-positive rated power {p}")]
    NonPositiveRatedPower { bus: String, p: f64 },
    #[error("control parameter at bus {bus} is not finite")]
    NonFiniteControlParameter { bus: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("leading eigenvalue is not simple (gap {gap:e})")]
    DegenerateLeadingEigenvalue { gap: f64 },
    #[error("left/right eigenvectors are nearly orthogonal (|y'x| = {0:e})")]
    BiorthogonalityBreakdown(f64),
    #[error("no sign change found in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("operating point at {0} is not on the stable side")]
    UnstableStart(f64),
    #[error("invalid loading range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("matrix is singular")]
    SingularMatrix,
}

impl Error {
    /// Stable machine-readable code, used in CLI error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveReactance { .. } => "NON_POSITIVE_REACTANCE",
            Error::NonPositiveTheveninReactance { .. } => "NON_POSITIVE_THEVENIN_REACTANCE",
            Error::DisconnectedFromGround { .. } => "DISCONNECTED_FROM_GROUND",
            Error::DuplicateBus(_) => "DUPLICATE_BUS",
            Error::UnknownBus(_) => "UNKNOWN_BUS",
            Error::SelfLoop(_) => "SELF_LOOP",
            Error::EmptyNetwork => "EMPTY_NETWORK",
            Error::EliminatingConverterBus(_) => "ELIMINATING_CONVERTER_BUS",
            Error::MissingConverter(_) => "MISSING_CONVERTER",
            Error::SingularInteriorBlock => "SINGULAR_INTERIOR_BLOCK",
            Error::NonPositiveRatedPower { .. } => "NON_POSITIVE_RATED_POWER",
            Error::NonFiniteControlParameter { .. } => "NON_FINITE_CONTROL_PARAMETER",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::DegenerateLeadingEigenvalue { .. } => "DEGENERATE_LEADING_EIGENVALUE",
            Error::BiorthogonalityBreakdown(_) => "BIORTHOGONALITY_BREAKDOWN",
            Error::NoBracket { .. } => "NO_BRACKET",
            Error::UnstableStart(_) => "UNSTABLE_START",
            Error::InvalidRange { .. } => "INVALID_RANGE",
            Error::SingularMatrix => "SINGULAR_MATRIX",
        }
    }
}
