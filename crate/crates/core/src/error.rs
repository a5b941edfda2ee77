use thiserror::Error;

/// Errors raised by the simulator and DSP library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input size error: {0}")]
    InputSize(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("frame synchronization failed: correlation peak {peak:.3} below threshold {threshold:.3}")]
    SyncFailure { peak: f64, threshold: f64 },

    #[error("equalizer diverged at symbol {symbol}")]
    EqualizerDivergence { symbol: usize },

    #[error("frequency-offset loop diverged at burst {burst} (estimate {fo_hz:.3e} Hz)")]
    LoopDivergence { burst: usize, fo_hz: f64 },

    #[error("degenerate dual-reference geometry: walk-off separation {separation:.3} grid samples")]
    DegenerateGeometry { separation: f64 },

    #[error("unsupported operating point: code rate {rate:.4} outside (0, 1]")]
    UnsupportedOperatingPoint { rate: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
