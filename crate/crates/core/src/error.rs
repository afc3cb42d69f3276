use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// No root of the self-consistency quadratic lies in the physical domain.
    /// Valid parameters never produce this.
    #[error("no physical self-consistent root at x = {x} (G = {coupling})")]
    NoPhysicalRoot { x: f64, coupling: f64 },

    #[error("heating regime: position-averaged friction {beta_avg} >= 0, no equilibrium")]
    HeatingRegime { beta_avg: f64 },

    #[error("time step {dt} violates the stability guard; use dt <= {suggested}")]
    UnstableStep { dt: f64, suggested: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty input")]
    EmptyInput,

    #[error("root search failed: {0}")]
    RootSearch(String),
}
