use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("round {round} is outside [1, {horizon}]")]
    RoundOutOfRange { round: u64, horizon: u64 },

    #[error("protocol violation at round {round}: action {action} is not in [1, {arms}]")]
    ProtocolViolation { round: u64, action: usize, arms: usize },

    #[error("unclipped losses were not retained for this sequence")]
    UnclippedDropped,

    #[error("action trace was not recorded")]
    MissingActions,

    #[error("cannot fit a power law: {0}")]
    Fit(String),

    #[error("unknown policy `{name}` (available: {available})")]
    UnknownPolicy { name: String, available: String },

    #[error("malformed policy spec `{spec}`: {reason}")]
    PolicySpec { spec: String, reason: String },

    #[error("{path}: line {line}: {reason}")]
    Parse { path: String, line: u64, reason: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
