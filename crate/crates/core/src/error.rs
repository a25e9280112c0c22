use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("invalid degrees of freedom {dof} for dimension {dim}")]
    InvalidDegreesOfFreedom { dof: f64, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dates are not monthly: {0}")]
    NonMonthlyDates(String),

    #[error("interior missing value: {0}")]
    InteriorMissing(String),

    #[error("non-positive level {value} at position {index}")]
    NonPositiveLevel { index: usize, value: f64 },

    #[error("missing tick: {0}")]
    MissingTick(String),

    #[error("firm {firm} has constant leverage")]
    ZeroVariance { firm: String },

    #[error("insufficient observations: {rows} usable rows, need more than {needed}")]
    InsufficientObservations { rows: usize, needed: usize },

    #[error("Gibbs sampler failed at iteration {iteration}: {source}")]
    Sampler {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("every draw had a degenerate normalization ({dropped} dropped)")]
    DegenerateNormalization { dropped: usize },

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("regressor `{column}` has no variation left after absorbing fixed effects")]
    NoVariationLeft { column: String },

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("leverage constraint violated by the unconstrained solution (b1 = {b1}, theta*k1 = {limit})")]
    ConstraintViolated { b1: f64, limit: f64 },

    #[error("no feasible allocation with positive consumption")]
    InfeasibleConsumption,

    #[error("no sign change of the constrained optimality condition on ({lo:e}, {hi:e})")]
    NoBracket { lo: f64, hi: f64 },

    #[error("recovered multiplier {mu:e} is negative in the constrained regime")]
    NegativeMultiplier { mu: f64 },

    #[error("parameter pair does not straddle the kink: {0}")]
    RegimeMismatch(String),

    #[error("unknown {kind} `{name}` (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable, machine-parsable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::InvalidDegreesOfFreedom { .. } => "InvalidDegreesOfFreedom",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::EmptyInput(_) => "EmptyInput",
            Error::NonFinite(_) => "NonFinite",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::NonMonthlyDates(_) => "NonMonthlyDates",
            Error::InteriorMissing(_) => "InteriorMissing",
            Error::NonPositiveLevel { .. } => "NonPositiveLevel",
            Error::MissingTick(_) => "MissingTick",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::InsufficientObservations { .. } => "InsufficientObservations",
            Error::Sampler { .. } => "SamplerFailure",
            Error::DegenerateNormalization { .. } => "DegenerateNormalization",
            Error::EmptyPartition(_) => "EmptyPartition",
            Error::NoVariationLeft { .. } => "NoVariationLeft",
            Error::RankDeficient(_) => "RankDeficient",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::ConstraintViolated { .. } => "ConstraintViolated",
            Error::InfeasibleConsumption => "InfeasibleConsumption",
            Error::NoBracket { .. } => "NoBracket",
            Error::NegativeMultiplier { .. } => "NegativeMultiplier",
            Error::RegimeMismatch(_) => "RegimeMismatch",
            Error::UnknownStrategy { .. } => "UnknownStrategy",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }
}
