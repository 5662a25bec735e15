use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("mode with zero frequency requested (massless field at k = 0)")]
    ExcludedMode,

    #[error("orbitals are not orthonormal (Gram deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("unstable step at t = {time}: Gram deviation {deviation:.3e}")]
    Unstable { time: f64, deviation: f64 },

    #[error("non-finite values at t = {0}")]
    NonFinite(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("basis dimension {dim} exceeds budget {budget}")]
    BudgetExceeded { dim: usize, budget: usize },

    #[error("coherent-state truncation weight {weight:.3e} above threshold {threshold:.3e}")]
    Truncation { weight: f64, threshold: f64 },

    #[error("norm drift {0:.3e} during propagation")]
    NormDrift(f64),

    #[error("Krylov propagation failed to converge (residual {0:.3e})")]
    Krylov(f64),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::NonFinite(_)
                | Error::NormDrift(_)
                | Error::Krylov(_)
                | Error::NotOrthonormal(_)
        )
    }
}
