use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported point group `{0}`")]
    UnsupportedGroup(String),
    #[error("unknown irrep `{0}`")]
    UnknownIrrep(String),
    #[error("unknown symmetry operation `{0}`")]
    UnknownOp(String),

    #[error("mesh parse error: {0}")]
    Parse(String),
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifoldEdge(usize, usize, usize),
    #[error("mesh is not invariant under `{0}`")]
    SymmetryBroken(String),

    #[error("negative surface resistivity {0}")]
    NegativeResistivity(f64),
    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    SingularMatrix(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state has zero radiated power")]
    ZeroRadiatedPower,

    #[error("excitation has nonzero entries outside the generator cell (index {0})")]
    SourceOutsideGenerator(usize),
    #[error("operator is not invariant under the group (relative residual {0:e})")]
    NotInvariant(f64),

    #[error("invalid port position {0}")]
    InvalidPosition(usize),
    #[error("vector is not in the column space of the port matrix (residual {0:e})")]
    NotInColumnSpace(f64),
    #[error("zero excitation")]
    ZeroExcitation,
    #[error("amplitude pencil is singular")]
    SingularB,
    #[error("empty result set")]
    EmptySet,
    #[error("combinatorial budget exceeded: {0} evaluations requested, cap is {1}")]
    CombinatorialBudgetExceeded(u128, u128),
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for configuration / IO class failures (as opposed to numerical ones).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Io(_)
                | Error::UnsupportedGroup(_)
                | Error::UnknownIrrep(_)
                | Error::UnknownOp(_)
                | Error::InvalidPosition(_)
                | Error::Invalid(_)
                | Error::NegativeResistivity(_)
                | Error::DegenerateTriangle(_)
                | Error::NonManifoldEdge(..)
                | Error::SymmetryBroken(_)
                | Error::EmptySet
                | Error::CombinatorialBudgetExceeded(..)
        )
    }
}
