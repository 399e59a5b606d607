use std::path::PathBuf;

/// Unified error type for the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // source errors are embedded in the Display text rather than exposed via
    // source(), so anyhow's alternate formatting does not print them twice
    #[error("i/o error on {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("unsupported image format: {0}")]
    ImageFormat(String),

    #[error("multi-channel input, expected single-channel 8-bit")]
    MultiChannel,

    #[error("bit depth {0} is not 8-bit")]
    BitDepth(u32),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("mask is not binary (values other than 0 and a single on-value)")]
    NonBinaryMask,

    #[error("all pixels are masked")]
    AllMasked,

    #[error("target bpp {target} out of range or exceeds source bpp {source_bpp}")]
    BadBpp { target: u8, source_bpp: u8 },

    #[error("empty co-occurrence: no valid pixel pair for the requested direction/distance")]
    EmptyCooccurrence,

    #[error("matrix contains a negative entry at ({row},{col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("masked image not accepted: {0}")]
    MaskedInput(String),

    #[error("factorization rank {k} exceeds min(n,m) = {max}")]
    RankTooLarge { k: usize, max: usize },

    #[error("vector length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("training data contains a single class only")]
    SingleClass,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("feature kind mismatch: model expects {expected}, got {actual}")]
    FeatureKindMismatch { expected: String, actual: String },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {0} absent in a training fold")]
    ClassAbsentInFold(String),

    #[error("sample {id}: {cause}")]
    Sample { id: String, cause: Box<Error> },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io { path: path.into(), cause }
    }

    /// Attach a sample id so pipeline errors name the offending input.
    pub fn for_sample(self, id: impl Into<String>) -> Self {
        Error::Sample { id: id.into(), cause: Box::new(self) }
    }

    /// Stable machine-readable tag for the CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::ImageFormat(_) => "image-format",
            Error::MultiChannel => "multi-channel",
            Error::BitDepth(_) => "bit-depth",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonBinaryMask => "non-binary-mask",
            Error::AllMasked => "all-masked",
            Error::BadBpp { .. } => "bad-bpp",
            Error::EmptyCooccurrence => "empty-cooccurrence",
            Error::NegativeEntry { .. } => "negative-entry",
            Error::MaskedInput(_) => "masked-input",
            Error::RankTooLarge { .. } => "rank-too-large",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::SingleClass => "single-class",
            Error::NonFinite(_) => "non-finite",
            Error::DegenerateModel(_) => "degenerate-model",
            Error::FeatureKindMismatch { .. } => "feature-kind-mismatch",
            Error::InvalidRecord(_) => "invalid-record",
            Error::InvalidConfig(_) => "invalid-config",
            Error::ClassAbsentInFold(_) => "class-absent-in-fold",
            Error::Sample { cause, .. } => cause.kind(),
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
