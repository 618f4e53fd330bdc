//! Exit-code taxonomy: 0 success, 1 input problem, 2 numerical failure,
//! 3 infeasible request. Scripts can branch on the failure class.

use sirkit::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(msg) | CliError::Numerical(msg) | CliError::Infeasible(msg) => msg,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let msg = err.to_string();
        match err {
            CoreError::InvalidInput(_)
            | CoreError::ShapeMismatch(_)
            | CoreError::Io(_)
            | CoreError::Csv { .. } => CliError::Input(msg),
            CoreError::SingularCovariance(_)
            | CoreError::CUpdateSingular
            | CoreError::RankDeficientBasis(_) => CliError::Numerical(msg),
            CoreError::MinimizerExists | CoreError::InsufficientRank { .. } => {
                CliError::Infeasible(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(format!("I/O error: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
