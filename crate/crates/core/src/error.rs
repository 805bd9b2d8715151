use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants map one-to-one onto the failure modes of the public operations;
/// the CLI turns them into exit codes via [`Error::is_usage`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-positive rate: {0}")]
    NonPositiveRate(String),
    #[error("negative mutation rate mu[{i}][{j}] = {value}")]
    NegativeMutation { i: usize, j: usize, value: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid interaction: {0}")]
    InvalidInteraction(String),
    #[error("mutation preset row {row} sums to {sum}, expected 0")]
    RowSumNotZero { row: usize, sum: f64 },

    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("matrix has a negative off-diagonal entry after shifting")]
    NegativeEntry,
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("wrong interaction kind: {0}")]
    WrongInteractionKind(String),
    #[error("initial condition has zero total mass")]
    ZeroInitialMass,

    #[error("Perron eigenvalue is not positive: {0}")]
    NonPositivePerron(f64),
    #[error("existence hypothesis violated: {0}")]
    Hypothesis3Violated(String),
    #[error("fixed-point corrector did not converge at s = {0}")]
    InnerNoConvergence(f64),
    #[error("homotopy path left the a-priori box at s = {s} (total mass {mass})")]
    LeftAprioriBox { s: f64, mass: f64 },

    #[error("reference state has a non-positive component")]
    NonPositiveReference,
    #[error("mutation matrix is not symmetric")]
    AsymmetricMutation,
    #[error("reference state is not stationary (residual {0:e})")]
    NotStationaryReference(f64),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("reference vector is zero")]
    ZeroReference,

    #[error("zero-eigenvector is not proportional to the reference state (deviation {0:e})")]
    KernelMismatch(f64),
    #[error("insufficient tail: {0}")]
    InsufficientTail(String),
    #[error("model outside theorem scope: {0}")]
    OutOfTheoremScope(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors caused by malformed input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NonPositiveRate(_)
                | Error::NegativeMutation { .. }
                | Error::NonFinite(_)
                | Error::InvalidInteraction(_)
                | Error::RowSumNotZero { .. }
                | Error::Parse { .. }
                | Error::UnknownPreset(_)
                | Error::InvalidArgument(_)
                | Error::WrongInteractionKind(_)
                | Error::OutOfTheoremScope(_)
        )
    }

    /// Short machine-readable tag, used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonPositiveRate(_) => "NonPositiveRate",
            Error::NegativeMutation { .. } => "NegativeMutation",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidInteraction(_) => "InvalidInteraction",
            Error::RowSumNotZero { .. } => "RowSumNotZero",
            Error::NotIrreducible => "NotIrreducible",
            Error::NegativeEntry => "NegativeEntry",
            Error::NoConvergence(_) => "NoConvergence",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::SingularMatrix => "SingularMatrix",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::WrongInteractionKind(_) => "WrongInteractionKind",
            Error::ZeroInitialMass => "ZeroInitialMass",
            Error::NonPositivePerron(_) => "NonPositivePerron",
            Error::Hypothesis3Violated(_) => "Hypothesis3Violated",
            Error::InnerNoConvergence(_) => "InnerNoConvergence",
            Error::LeftAprioriBox { .. } => "LeftAprioriBox",
            Error::NonPositiveReference => "NonPositiveReference",
            Error::AsymmetricMutation => "AsymmetricMutation",
            Error::NotStationaryReference(_) => "NotStationaryReference",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::ZeroReference => "ZeroReference",
            Error::KernelMismatch(_) => "KernelMismatch",
            Error::InsufficientTail(_) => "InsufficientTail",
            Error::OutOfTheoremScope(_) => "OutOfTheoremScope",
            Error::Parse { .. } => "Parse",
            Error::UnknownPreset(_) => "UnknownPreset",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
