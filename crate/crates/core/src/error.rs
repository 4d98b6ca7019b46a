use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("decrease factor out of range: b = {0} (must lie in (0, 1))")]
    DecreaseOutOfRange(String),

    #[error("additive increase must be positive: a = {0}")]
    IncreaseNotPositive(String),

    #[error("Reno flows must use a = 1, b = 1/2 (got a = {a}, b = {b})")]
    RenoParams { a: f64, b: f64 },

    #[error("link capacity must be positive")]
    ZeroCapacity,

    #[error("segment size must be positive")]
    ZeroSegmentSize,

    #[error("base RTT must be positive")]
    BadBaseRtt,

    #[error("buffer horizon must be positive (got {0} s)")]
    BadBufferHorizon(f64),

    #[error("buffer must hold at least one packet")]
    EmptyBuffer,

    #[error("scenario has no flows")]
    NoFlows,

    #[error("cycle must have >=1 round")]
    EmptyCycle,

    #[error("packet rate must be positive (flow {flow}: {rate})")]
    BadRate { flow: usize, rate: String },

    #[error("loss count must be >= 1")]
    ZeroLosses,

    #[error("too many loss sequences to enumerate ({0}); use hit-set probabilities instead")]
    TooManySequences(u128),

    #[error("hit-set enumeration supports at most {max} flows (got {got})")]
    TooManyFlows { got: usize, max: usize },

    #[error("no complete cycle observed")]
    NoCompleteCycle,

    #[error("no convergence within {0} rounds")]
    NoConvergence(u64),

    #[error("trace ends at {have:.3} s but sampling needs {needed:.3} s")]
    TraceTooShort { needed: f64, have: f64 },

    #[error("state space exceeds cap of {cap} states")]
    StateSpaceOverflow { cap: usize },

    #[error("exact chain supports 1 to 4 flows (got {0})")]
    ChainFlowCount(usize),

    #[error("exact chain needs a tail-drop bottleneck")]
    ChainNeedsTailDrop,

    #[error("window growth never reaches the buffer limit from state {0:?}")]
    NoNextEvent(Vec<f64>),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    StationaryNotConverged { iterations: usize, residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("nothing to plot")]
    NothingToPlot,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
