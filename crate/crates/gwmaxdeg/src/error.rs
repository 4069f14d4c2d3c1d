use gwmaxdeg_core::Error;
use thiserror::Error;

/// Failures of a command, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0} bound row(s) violated")]
    BoundViolation(usize),
    #[error("{count} well-populated cell(s) with |z| >= {threshold}")]
    OracleDisagreement { count: usize, threshold: f64 },
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::BoundViolation(_) => 4,
            CliError::OracleDisagreement { .. } => 5,
            CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::EmptyWindow | Error::ExcessiveCensoring { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Spec(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::from(Error::InvalidParameter("p", 0.0)).exit_code(),
            2
        );
        assert_eq!(CliError::from(Error::EmptyWindow).exit_code(), 3);
        assert_eq!(CliError::BoundViolation(1).exit_code(), 4);
        assert_eq!(
            CliError::OracleDisagreement {
                count: 1,
                threshold: 4.0
            }
            .exit_code(),
            5
        );
    }
}
