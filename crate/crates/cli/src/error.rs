use std::fmt;

use serde::Serialize;

/// Failure of a run, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or schema-invalid configuration, or a hypothesis the
    /// configured model does not satisfy. Exit code 2.
    Validation {
        field: Option<String>,
        message: String,
    },
    /// Non-convergence, caps or overflow during the computation. Exit code 3.
    Numerical(String),
    /// Reading the configuration or writing results failed. Exit code 2.
    Io(String),
}

#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub kind: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<&'a str>,
    pub message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation { .. } | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    pub fn record(&self) -> ErrorRecord<'_> {
        let (kind, field) = match self {
            Self::Validation { field, .. } => ("validation", field.as_deref()),
            Self::Numerical(_) => ("numerical", None),
            Self::Io(_) => ("io", None),
        };
        ErrorRecord {
            kind,
            exit_code: self.exit_code(),
            field,
            message: self.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation {
                field: Some(field),
                message,
            } => write!(f, "invalid `{field}`: {message}"),
            Self::Validation {
                field: None,
                message,
            } => write!(f, "invalid configuration: {message}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<lattice_kms::Error> for CliError {
    fn from(e: lattice_kms::Error) -> Self {
        use lattice_kms::Error as E;
        match e {
            E::NoConvergence { .. }
            | E::CapExceeded { .. }
            | E::Overflow(_)
            | E::NoCertificate(_) => Self::Numerical(e.to_string()),
            E::InvalidParameter { name, ref reason } => Self::Validation {
                field: Some(name.to_string()),
                message: reason.clone(),
            },
            other => Self::Validation {
                field: None,
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}
