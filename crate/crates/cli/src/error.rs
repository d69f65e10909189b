use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{study}: {source}")]
    Study {
        study: &'static str,
        #[source]
        source: autonomy_core::Error,
    },
    #[error("amds: {0}")]
    Amds(#[from] autonomy_amds::Error),
    #[error("export: {0}")]
    Export(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use autonomy_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Study { source, .. } => match source {
                E::Config(_) | E::Io(_) | E::Json(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            CliError::Amds(e) => match e {
                autonomy_amds::Error::Config(_)
                | autonomy_amds::Error::Scenario { .. }
                | autonomy_amds::Error::Io(_)
                | autonomy_amds::Error::Json(_) => EXIT_CONFIG,
                autonomy_amds::Error::Core(_) => EXIT_NUMERICAL,
                _ => EXIT_PARTIAL,
            },
            CliError::Export(_) => EXIT_CONFIG,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Export(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Export(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Export(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attach a study name to core errors.
pub trait StudyContext<T> {
    fn study(self, name: &'static str) -> CliResult<T>;
}

impl<T> StudyContext<T> for autonomy_core::Result<T> {
    fn study(self, name: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Study { study: name, source })
    }
}
