use thiserror::Error;

/// Errors raised by the simulation kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("POVM completeness violated: ||sum_g F_g - I||_F = {residual:e}")]
    Completeness { residual: f64 },

    #[error("effect {index} is not positive semidefinite: minimum eigenvalue {eigenvalue:e}")]
    Positivity { index: usize, eigenvalue: f64 },

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("pointer states undefined: |beta_0| = {0} (no population has left the initial level)")]
    UndefinedPointer(f64),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by malformed or inconsistent input, as opposed
    /// to a numerical breakdown inside an otherwise valid computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::Validation(_)
                | Error::NotPsd { .. }
                | Error::Completeness { .. }
                | Error::Positivity { .. }
                | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
