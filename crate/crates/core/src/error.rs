use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// Each variant maps to a stable, machine-readable name via [`Error::code`],
/// which the CLI and the C ABI report verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies on the projection center")]
    PointAtCenter,
    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("sampling constraints cannot hold: {0}")]
    Infeasible(String),
    #[error("no admissible sample after {0} attempts")]
    MaxResampleExceeded(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("subspace basis does not have full column rank")]
    RankDeficientBasis,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("tensor is zero")]
    ZeroTensor,
    #[error("projection centers intersect")]
    CentersIntersect,
    #[error("intersection invariant i = {0} is negative")]
    NegativeIntersectionInvariant(i64),
    #[error("general position violated: {0}")]
    GeneralPositionViolated(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("underdetermined system: {have} constraints, at least {need} required")]
    Underdetermined { have: usize, need: usize },
    #[error("reconstruction from views of dimension one is always ambiguous")]
    AmbiguousReconstruction,
    #[error("optimization did not converge (best distance {0:e})")]
    ConvergenceFailure(f64),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("generality assumption violated: {0}")]
    GeneralityViolated(String),
    #[error("no invertible constant block of order k+1")]
    NoInvertibleBlock,
    #[error("numerical bound violated: {0}")]
    BoundViolated(String),
    #[error("only {found} of {requested} critical points converged")]
    ShortSample { found: usize, requested: usize },
    #[error("point is not on the critical locus")]
    NotOnLocus,
    #[error("no conjugate point: {0}")]
    NoConjugate(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PointAtCenter => "PointAtCenter",
            Error::RankDeficient(_) => "RankDeficient",
            Error::Infeasible(_) => "Infeasible",
            Error::MaxResampleExceeded(_) => "MaxResampleExceeded",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::RankDeficientBasis => "RankDeficientBasis",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::ZeroTensor => "ZeroTensor",
            Error::CentersIntersect => "CentersIntersect",
            Error::NegativeIntersectionInvariant(_) => "NegativeIntersectionInvariant",
            Error::GeneralPositionViolated(_) => "GeneralPositionViolated",
            Error::NumericalBreakdown(_) => "NumericalBreakdown",
            Error::Underdetermined { .. } => "Underdetermined",
            Error::AmbiguousReconstruction => "AmbiguousReconstruction",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::GeneralityViolated(_) => "GeneralityViolated",
            Error::NoInvertibleBlock => "NoInvertibleBlock",
            Error::BoundViolated(_) => "BoundViolated",
            Error::ShortSample { .. } => "ShortSample",
            Error::NotOnLocus => "NotOnLocus",
            Error::NoConjugate(_) => "NoConjugate",
            Error::EmptyInput => "EmptyInput",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
