use thiserror::Error;

/// Problems with the configuration; all of them exit with status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unresolved {kind} reference {name:?}")]
    Unresolved { kind: &'static str, name: String },

    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] procstar_core::Error),
}
