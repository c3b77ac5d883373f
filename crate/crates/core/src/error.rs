use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The policy-induced chain is not irreducible.
    #[error("chain is not irreducible: state {unreachable} is not mutually reachable from state 0")]
    NotIrreducible { unreachable: usize },

    /// The policy-induced chain is periodic.
    #[error("chain is not aperiodic: period {period}")]
    NotAperiodic { period: usize },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("invalid trace decay: gamma={gamma}, lambda={lambda} (need gamma*lambda < 1, lambda in [0,1])")]
    InvalidLambda { gamma: f64, lambda: f64 },

    #[error("feature matrix has numerical rank 0")]
    ZeroFeatureMatrix,

    #[error("linear system A w = -b is inconsistent: residual {residual:e}")]
    InconsistentSystem { residual: f64 },

    /// A check that the theory guarantees failed numerically.
    #[error("{lemma} violated: {detail}")]
    LemmaViolation { lemma: &'static str, detail: String },

    #[error("non-finite update at step {t}: {detail}")]
    NonFiniteUpdate { t: u64, detail: String },

    #[error("chain did not mix to accuracy {accuracy} within {max_steps} steps")]
    NoMixing { accuracy: f64, max_steps: usize },

    #[error("fit window [{lo}, {hi}] holds fewer than two usable checkpoints")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl Error {
    /// Process exit status for the command-line tool: 2 for unusable input,
    /// 3 when the instance violates a standing assumption, 4 on divergence and
    /// 1 when a theoretical guarantee fails numerically.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidModel(_)
            | Error::DimensionMismatch(_)
            | Error::InvalidLambda { .. }
            | Error::EmptyWindow { .. } => 2,
            Error::NotIrreducible { .. }
            | Error::NotAperiodic { .. }
            | Error::ZeroFeatureMatrix
            | Error::InconsistentSystem { .. }
            | Error::SingularSystem(_)
            | Error::NoMixing { .. } => 3,
            Error::NonFiniteUpdate { .. } => 4,
            Error::LemmaViolation { .. } => 1,
        }
    }
}
