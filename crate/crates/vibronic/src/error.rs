use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("eigensolver failed ({routine}, info = {info})")]
    Eigensolver { routine: &'static str, info: i32 },
    #[error("linear-algebra backend self-check failed: {0}")]
    Backend(String),
    #[error("degenerate eigenpair: {0}")]
    Degenerate(String),
    #[error("diabatization anchor ambiguous: {0}")]
    AnchorAmbiguous(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("missing integral label: {0}")]
    MissingLabel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds guard {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },
    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error(
        "Fock truncation violated: top-level population {population:e}; try n_fock >= {suggested}"
    )]
    Truncation { population: f64, suggested: usize },
    #[error("unsupported boson polynomial: {0}")]
    UnsupportedPolynomial(String),
    #[error("discarded weight {0} exceeds 0.05")]
    DiscardedWeight(f64),
    #[error("incompatible spin/electron parity: {0}")]
    Parity(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("comparison error: {0}")]
    Compare(String),
    #[error("density check failed: {0}")]
    Density(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
