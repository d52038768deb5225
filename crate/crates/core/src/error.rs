use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("quality factor {0} outside [1, 100]")]
    InvalidQuality(u32),

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(u8),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("color mode {mode} cannot encode a {channels}-channel image")]
    ColorModeMismatch { mode: &'static str, channels: u8 },

    #[error("mask shape {mask:?} does not match encoded image shape {image:?}")]
    MaskMismatch {
        mask: (usize, usize),
        image: (usize, usize),
    },

    #[error("invalid mask spec: {0}")]
    InvalidMaskSpec(String),

    #[error("invalid probability {0} (expected a value in [0, 1])")]
    InvalidProbability(f64),

    #[error("coefficient {value} in plane {plane} does not fit in 16 bits")]
    CoefficientOverflow { plane: usize, value: i32 },

    #[error("malformed stream: {0}")]
    Malformed(String),

    #[error("stream header of {0} bytes does not fit in the first packet")]
    HeaderTooLarge(usize),

    #[error("packet 0 (stream header) was not received; image is undecodable")]
    MissingHeaderPacket,

    #[error("duplicate packet sequence number {0}")]
    DuplicatePacket(u32),

    #[error("inconsistent packet set: {0}")]
    InconsistentPackets(String),

    #[error("channel configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
