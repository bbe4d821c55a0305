use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped by the stage that produces them so the CLI can
/// print a stable machine-readable kind alongside the message.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular fit: regressors are collinear (channels {channels:?})")]
    SingularFit { channels: Vec<String> },

    #[error("nonstationary subject: channel {channel} has estimated d = {d:.4}")]
    NonstationarySubject { channel: String, d: f64 },

    #[error("unstable model: spectral radius {radius:.6} is not below 1")]
    Unstable { radius: f64 },

    #[error("riccati divergence: {0}")]
    RiccatiDivergence(String),

    #[error("ill-posed model: {0}")]
    IllPosed(String),

    #[error("inconsistent measures: T_i={t_i:e}, T_k={t_k:e}, T_ik={t_ik:e}")]
    InconsistentMeasures { t_i: f64, t_k: f64, t_ik: f64 },

    #[error("negative information measure {name} = {value:e}")]
    NegativeMeasure { name: &'static str, value: f64 },

    #[error("scale tau={tau} (index {index}): {source}")]
    Scale {
        index: usize,
        tau: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("channel count: {0}")]
    ChannelCount(String),

    #[error("data quality: {0}")]
    DataQuality(String),

    #[error("degenerate channel {0}: zero variance")]
    DegenerateChannel(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::SingularFit { .. } => "singular_fit",
            Error::NonstationarySubject { .. } => "nonstationary_subject",
            Error::Unstable { .. } => "unstable",
            Error::RiccatiDivergence(_) => "riccati_divergence",
            Error::IllPosed(_) => "ill_posed",
            Error::InconsistentMeasures { .. } => "inconsistent_measures",
            Error::NegativeMeasure { .. } => "negative_measure",
            Error::Scale { source, .. } => source.kind(),
            Error::Parse { .. } => "parse",
            Error::ChannelCount(_) => "channel_count",
            Error::DataQuality(_) => "data_quality",
            Error::DegenerateChannel(_) => "degenerate_channel",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
