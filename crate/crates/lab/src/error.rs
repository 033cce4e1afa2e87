use std::io;

/// Failure of one CLI run, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Config(String),
    /// Divergence or a non-converging neutral recovery.
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    /// `check --strict` found a counterexample.
    #[error("{0}")]
    StrictFail(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::StrictFail(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io(_) => "io",
            Self::Config(_) => "config",
            Self::Numerical(_) => "numerical",
            Self::StrictFail(_) => "check-failed",
        }
    }

    /// The single diagnostic line printed on stderr.
    pub fn diagnostic(&self) -> String {
        let reason = self.to_string().replace(['\n', '\r'], " ");
        format!("sdde: error={} exit={} reason={:?}", self.kind(), self.exit_code(), reason)
    }
}

impl From<sdde_core::Error> for LabError {
    fn from(e: sdde_core::Error) -> Self {
        use sdde_core::Error as E;
        match e {
            E::FixedPoint { .. } | E::Divergence { .. } => Self::Numerical(e.to_string()),
            E::Domain(_) | E::Dimension { .. } | E::Contract(_) => Self::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for LabError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type LabResult<T> = Result<T, LabError>;
