use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl BenchError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Budget(_) => 4,
            BenchError::Io(_) => 1,
        }
    }
}

impl From<nelson_core::Error> for BenchError {
    fn from(e: nelson_core::Error) -> Self {
        use nelson_core::Error as E;
        let msg = e.to_string();
        match e {
            E::BudgetExceeded { .. } => BenchError::Budget(msg),
            E::InvalidParams(_) | E::ExcludedMode => BenchError::Config(msg),
            E::Io(_) | E::Csv(_) | E::Json(_) | E::Format(_) => BenchError::Io(msg),
            // too small a photon cap is a numerical limitation of the run
            E::Truncation { .. } | E::InsufficientSamples { .. } => BenchError::Numerical(msg),
            _ => BenchError::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
