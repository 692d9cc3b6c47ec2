use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("image must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("buffer holds {actual} values, expected {expected}")]
    BufferLength { expected: usize, actual: usize },

    #[error("dimension mismatch: {what} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    DimensionMismatch {
        what: &'static str,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },

    #[error("labels are not contiguous: label {missing} in [0, {count}) never occurs")]
    NonContiguousLabels { missing: u32, count: u32 },

    #[error("label {label} is out of range for {count} regions")]
    LabelOutOfRange { label: u32, count: u32 },

    #[error("feature field needs at least 5 channels, got {0}")]
    TooFewChannels(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("attention value {0} outside [0, 1]")]
    AttentionRange(f32),

    #[error("click at ({x}, {y}) lies outside the {width}x{height} image")]
    ClickOutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("click strength must be positive and finite, got {0}")]
    ClickStrength(f64),

    #[error("requested {requested} regions, valid range is [1, {max}]")]
    RegionCountOutOfRange { requested: usize, max: usize },

    #[error("invalid hierarchy parameter: {0}")]
    InvalidParams(&'static str),

    #[error("regions {0} and {1} are not adjacent")]
    NotAdjacent(u32, u32),

    #[error("region {0} is not alive")]
    DeadRegion(u32),

    #[error("region graph is disconnected: {remaining} regions left with no edges")]
    Disconnected { remaining: usize },

    #[error("merge sequence does not match partition: {0}")]
    SequenceMismatch(&'static str),
}
