use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("buffer of {len} values does not match a {width}x{height} grid")]
    BadDimensions { width: usize, height: usize, len: usize },

    #[error("gray value {value} outside [0, {max}]")]
    GrayLevelOutOfRange { value: u16, max: u16 },

    #[error("mask value {0} is not 0 or 1")]
    NotBinary(u8),

    #[error("invalid scale {scale} for a region of side {side}")]
    InvalidScale { scale: usize, side: usize },

    #[error("invalid scale configuration: {0}")]
    InvalidScaleConfig(&'static str),

    #[error("least-squares fit is degenerate (abscissae coincide or fewer than two points)")]
    DegenerateFit,

    #[error("invalid FFM parameters: {0}")]
    InvalidParams(&'static str),

    #[error("empty input")]
    Empty,

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("invalid value in {0}")]
    InvalidValue(&'static str),

    #[error("distance to an empty point set is undefined")]
    EmptySetDistance,

    #[error("IoU is undefined when both masks are empty")]
    UndefinedIoU,

    #[error("AUC needs at least one positive and one negative pixel")]
    DegenerateClasses,

    #[error("mask or its skeleton is empty")]
    EmptyMask,
}
