use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    // metric spaces
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("asymmetric entries at ({0},{1})")]
    Asymmetric(usize, usize),
    #[error("negative entry at ({0},{1})")]
    NegativeEntry(usize, usize),
    #[error("nonzero diagonal entry at index {0}")]
    NonzeroDiagonal(usize),
    #[error("distinct points {0} and {1} at distance zero")]
    ZeroOffDiagonal(usize, usize),
    #[error("triangle inequality fails: d({0},{1}) > d({0},{2}) + d({2},{1})")]
    TriangleViolation(usize, usize, usize),
    #[error("functions live on different spaces")]
    SpaceMismatch,
    #[error("point index {index} out of range for a space of {size} points")]
    IndexOutOfRange { index: usize, size: usize },

    // tight span
    #[error("function is not in P_X: f({0}) + f({1}) < d({0},{1})")]
    NotInPX(usize, usize),
    #[error("retraction did not reach tolerance within {0} iterations")]
    IterationBudgetExceeded(usize),
    #[error("barycentre of an empty tuple")]
    EmptyTuple,

    // groups
    #[error("bad letter {0:?}")]
    BadLetter(String),
    #[error("cannot parse element {0:?}: {1}")]
    ElementParse(String, String),
    #[error("element does not belong to group {0}")]
    ForeignElement(String),
    #[error("breadth-first search exceeded its budget of {0} elements")]
    BudgetExceeded(usize),
    #[error("word distance exceeds the search cap of {0}")]
    DistanceUnknown(u32),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),

    // translation lengths
    #[error("Lipschitz certificate has not been validated on a ball")]
    CertificateNotValidated,
    #[error("Lipschitz certificate fails at {0}")]
    CertificateViolated(String),

    // quasimorphisms
    #[error("pattern word is empty")]
    EmptyPattern,
    #[error("pattern word is not cyclically reduced")]
    NotCyclicallyReduced,

    // cocycles and extensions
    #[error("cocycle not normalised at {0}")]
    NormalisationFailure(String),
    #[error("cocycle identity fails at ({0}, {1}, {2})")]
    CocycleIdentityFailure(String, String, String),
    #[error("associativity fails at ({0}, {1}, {2})")]
    AssociativityFailure(String, String, String),
    #[error("elements come from different extensions")]
    CocycleMismatch,
    #[error("cocycle has no declared bound")]
    UnboundedCocycle,
    #[error("unknown cocycle {0:?}")]
    UnknownCocycle(String),

    // quasilines and structures
    #[error("invalid quasiline configuration: {0}")]
    QuasilineConfig(String),
    #[error("epsilon must lie in (0,1)")]
    EpsilonRange,
    #[error("parameters must lie in (0,1)")]
    ParamRange,
    #[error("translation length of t on the quasiline is not certified positive")]
    TauNotCertified,
    #[error("structure violation: {0}")]
    StructureViolation(String),

    // parsing
    #[error("cannot parse rational {0:?}")]
    RationalParse(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("invalid input: {0}")]
    Input(String),
}
