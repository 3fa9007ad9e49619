use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the estimation pipeline.
///
/// Every variant maps to a stable machine-readable [`Error::code`] and the
/// name of the stage that produced it ([`Error::module`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {function}: {message}")]
    Domain { function: &'static str, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("signal shorter than one analysis frame ({len} < {frame_len})")]
    SignalTooShort { len: usize, frame_len: usize },

    #[error("velocity direction too close to the dipole null (|cos theta0| = {cos_theta0:.3} < {cos_min})")]
    NearDipoleNull { cos_theta0: f64, cos_min: f64 },

    #[error("no usable velocity direction in band")]
    NoUsableDirection,

    #[error("no usable subband for fullband average")]
    NoUsableBand,

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),

    #[error("unsupported WAV codec: {0}")]
    UnsupportedCodec(String),

    #[error("channel count {got} does not match geometry capsule count {expected}")]
    ChannelCount { expected: usize, got: usize },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("ground truth missing for {0}")]
    MissingGroundTruth(String),

    #[error("band {band_hz:.1} Hz: {source}")]
    InBand {
        band_hz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(function: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            function,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_band(self, band_hz: f64) -> Self {
        Error::InBand {
            band_hz,
            source: Box::new(self),
        }
    }

    /// Stable short identifier for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EmptyInput(_) => "empty_input",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Geometry(_) => "geometry",
            Error::SignalTooShort { .. } => "signal_too_short",
            Error::NearDipoleNull { .. } => "near_dipole_null",
            Error::NoUsableDirection => "no_usable_direction",
            Error::NoUsableBand => "no_usable_band",
            Error::NoSignal(_) => "no_signal",
            Error::MissingFile(_) => "missing_file",
            Error::MalformedHeader(_) => "malformed_header",
            Error::UnsupportedCodec(_) => "unsupported_codec",
            Error::ChannelCount { .. } => "channel_count",
            Error::Config { .. } => "config",
            Error::MissingGroundTruth(_) => "missing_ground_truth",
            Error::InBand { source, .. } => source.code(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Pipeline stage the error originated in.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "sh",
            Error::Geometry(_) => "array",
            Error::SignalTooShort { .. } => "tf",
            Error::NearDipoleNull { .. } | Error::NoUsableDirection | Error::NoUsableBand => "drr",
            Error::NoSignal(_) => "pipeline",
            Error::MissingFile(_)
            | Error::MalformedHeader(_)
            | Error::UnsupportedCodec(_)
            | Error::ChannelCount { .. }
            | Error::Io(_) => "wav",
            Error::Config { .. } | Error::Json(_) => "config",
            Error::MissingGroundTruth(_) => "report",
            Error::InBand { source, .. } => source.module(),
            Error::InvalidArgument(_) | Error::EmptyInput(_) | Error::LengthMismatch { .. } => "input",
        }
    }

    /// Band context, if the error was raised while processing one subband.
    pub fn band_hz(&self) -> Option<f64> {
        match self {
            Error::InBand { band_hz, .. } => Some(*band_hz),
            _ => None,
        }
    }
}
