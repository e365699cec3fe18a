use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid PSF model: {0}")]
    InvalidPsf(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("empty projection window")]
    EmptyProjectionWindow,
    #[error("absorber out of field")]
    AbsorberOutOfField,
    #[error("cannot set PSNR on zero signal")]
    ZeroSignal,
    #[error("stack shape mismatch")]
    StackShapeMismatch,
    #[error("R-L requires nonnegative input")]
    NegativeInput,
    #[error("profile out of bounds")]
    ProfileOutOfBounds,
    #[error("peak truncated")]
    PeakTruncated,
    #[error("degenerate background")]
    DegenerateBackground,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("not a PAV1 file")]
    NotPav1,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
