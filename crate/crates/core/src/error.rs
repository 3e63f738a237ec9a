use thiserror::Error;

/// Everything that can go wrong while building eigensystems, connections or invariants.
#[derive(Debug, Error)]
pub enum Error {
    /// Left/right eigenvector overlap is too ill-conditioned to biorthogonalize.
    #[error("too close to an exceptional point (condition number {condition:.3e})")]
    NearExceptionalPoint { condition: f64 },

    #[error("path resolution too coarse: step-halving disagreement {disagreement:.3e}")]
    ResolutionTooCoarse { disagreement: f64 },

    #[error("ambiguous band tracking at step {step}: best overlap {best:.3}, runner-up {second:.3}")]
    AmbiguousTracking { step: usize, best: f64, second: f64 },

    #[error("embedding {embedding} is not compatible with model family {family}")]
    IncompatibleEmbedding { family: String, embedding: String },

    #[error("no closed-form eigensystem for {0}")]
    NoClosedForm(String),

    #[error("restoring weight diverges (|tanh(E/T)| = {tanh:.3e})")]
    DivergentWeight { tanh: f64 },

    #[error("weight sum P_m + P_n = {sum:.3e} underflows")]
    DenominatorUnderflow { sum: f64 },

    #[error("series has no transition")]
    NoTransition,

    #[error("series has {} transitions", .0.len())]
    MultipleTransitions(Vec<f64>),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag written into the `error` column of sweep output.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::NearExceptionalPoint { .. } => "near_exceptional_point",
            Error::ResolutionTooCoarse { .. } => "resolution_too_coarse",
            Error::AmbiguousTracking { .. } => "ambiguous_tracking",
            Error::IncompatibleEmbedding { .. } => "incompatible_embedding",
            Error::NoClosedForm(_) => "no_closed_form",
            Error::DivergentWeight { .. } => "divergent_weight",
            Error::DenominatorUnderflow { .. } => "denominator_underflow",
            Error::NoTransition => "no_transition",
            Error::MultipleTransitions(_) => "multiple_transitions",
            Error::NonFinite => "non_finite",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
