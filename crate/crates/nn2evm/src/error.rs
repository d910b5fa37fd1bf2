use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Architecture notation does not match `<int>L(<int>N)+`.
    #[error("invalid architecture notation at byte {offset}: {msg}")]
    NotationSyntax { offset: usize, msg: String },

    /// Declared layer count disagrees with the number of `N` groups.
    #[error("architecture notation declares {declared} layers but lists {listed}")]
    NotationStructure { declared: usize, listed: usize },

    /// Matrix/vector dimensions disagree with the declared architecture.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A parameter or input value is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Manifest carries a schema tag this build does not understand.
    #[error("unknown manifest schema {0:?}")]
    UnknownSchema(String),

    /// IDX container violation (magic, truncation, dimension overflow, label range).
    #[error("idx: {0}")]
    Idx(String),

    /// Decimal string cannot be parsed as a fixed-point value.
    #[error("invalid decimal at byte {offset}: {msg}")]
    DecimalSyntax { offset: usize, msg: String },

    /// More fractional digits than the 18 the fixed-point scale can hold.
    #[error("decimal has {digits} fractional digits, at most 18 representable")]
    Precision { digits: usize },

    /// Quantization precision outside 0..=18.
    #[error("precision {0} outside supported range 0..=18")]
    PrecisionRange(u32),

    /// Fixed-point result outside the signed 256-bit range.
    #[error("fixed-point overflow: {0}")]
    Overflow(String),

    /// No batch plan exists under the given gas limit and margin.
    #[error("infeasible upload plan: {0}")]
    Infeasible(String),

    /// Generated-contract constraint violated.
    #[error("codegen: {0}")]
    Codegen(String),

    /// Invalid CLI/config input.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI; stable per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::NotationSyntax { .. } | Error::NotationStructure { .. } => 3,
            Error::Precision { .. } | Error::PrecisionRange(_) | Error::DecimalSyntax { .. } => 4,
            Error::Infeasible(_) => 5,
            Error::Shape(_) | Error::NonFinite(_) | Error::UnknownSchema(_) | Error::Json(_) => 6,
            Error::Idx(_) => 7,
            Error::Overflow(_) => 8,
            Error::Codegen(_) => 9,
            Error::Config(_) => 10,
        }
    }

    /// Short machine-readable kind tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::NotationSyntax { .. } => "notation_syntax",
            Error::NotationStructure { .. } => "notation_structure",
            Error::Precision { .. } => "precision",
            Error::PrecisionRange(_) => "precision_range",
            Error::DecimalSyntax { .. } => "decimal_syntax",
            Error::Infeasible(_) => "plan_infeasible",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non_finite",
            Error::UnknownSchema(_) => "unknown_schema",
            Error::Json(_) => "json",
            Error::Idx(_) => "idx",
            Error::Overflow(_) => "overflow",
            Error::Codegen(_) => "codegen",
            Error::Config(_) => "config",
        }
    }
}
