use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("operator has eigenvalue {min_eig:.3e} below -{tol:.1e}")]
    NotPositive { min_eig: f64, tol: f64 },

    #[error("spectral function undefined at eigenvalue {0:.3e}")]
    SpectralDomain(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid superchannel: {0}")]
    InvalidSuperchannel(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("environment seize check failed: {0}")]
    Seize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
