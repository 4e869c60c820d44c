use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}{message}", key.as_ref().map(|k| format!("{k}: ")).unwrap_or_default())]
    Config { key: Option<String>, message: String },

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(endiff_core::Error),
}

impl From<endiff_core::Error> for CliError {
    fn from(e: endiff_core::Error) -> Self {
        match e {
            endiff_core::Error::Numerical { .. } => CliError::Core(e),
            other => CliError::Config {
                key: None,
                message: other.to_string(),
            },
        }
    }
}

impl CliError {
    /// 2 for numerical failures, 1 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(endiff_core::Error::Numerical { .. }) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_two() {
        let numerical = endiff_core::Error::Numerical {
            message: "no convergence".into(),
            estimate: 1.0,
            error: 0.5,
            evaluations: 10,
        };
        assert_eq!(CliError::from(numerical).exit_code(), 2);
        assert_eq!(CliError::from(endiff_core::Error::Config("x".into())).exit_code(), 1);
        let domain = endiff_core::Error::Domain { what: "radius", value: -1.0 };
        assert_eq!(CliError::from(domain).exit_code(), 1);
    }
}
