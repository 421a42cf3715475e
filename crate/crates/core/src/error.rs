use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid corridor: {0}")]
    InvalidCorridor(String),

    #[error("unknown junction J{}", .0 + 1)]
    UnknownJunction(usize),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("car-following gap must be positive, got {0}")]
    NonPositiveGap(f64),

    #[error("signal decision at t={t_s}s is off the {window_s}s decision grid")]
    OffGridDecision { t_s: f64, window_s: f64 },

    #[error("simulation invariant violated at t={t_s}s: {detail}")]
    Invariant { t_s: f64, detail: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged at episode {episode}: loss is not finite")]
    NonFiniteLoss { episode: usize },

    #[error("backup series has {0} samples, at least 2 are needed")]
    ShortSeries(usize),

    #[error("zero-stop ratio undefined: no completed vehicles on the requested route class")]
    NoCompletedVehicles,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidCorridor(_)
                | Error::InvalidDemand(_)
                | Error::InvalidConfig(_)
                | Error::Checkpoint(_)
                | Error::Json(_)
                | Error::Toml(_)
                | Error::UnknownJunction(_)
        )
    }
}
