use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Hilbert space dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("excitation number {m} is out of range for {n} qubits")]
    InvalidExcitation { n: usize, m: usize },

    #[error("Fock state |{fock_n}> exceeds the truncation n_max = {n_max}")]
    Truncation { fock_n: usize, n_max: usize },

    #[error("operands belong to different Hilbert spaces")]
    SpaceMismatch,

    #[error("matrix is not Hermitian (max entry deviation {0:e})")]
    NotHermitian(f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("expectation value has imaginary part {0:e}")]
    ComplexExpectation(f64),

    #[error("time step {dt:e} s exceeds the stability guard {limit:e} s")]
    StepSize { dt: f64, limit: f64 },

    #[error("population {population:e} reached the truncation boundary n = {n_max}; increase n_max")]
    Leakage { population: f64, n_max: usize },

    #[error("adiabatic branch continuity lost near t = {time:e} s (overlap {overlap:.4}); refine the grid")]
    Continuity { time: f64, overlap: f64 },

    #[error("degenerate eigenvalues at t = {time:e} s; eigenvector gauge is ambiguous")]
    Degenerate { time: f64 },

    #[error("branches {i} and {j} are nearly degenerate at t = {time:e} s; diabatic bound unreliable")]
    NearDegenerate { i: usize, j: usize, time: f64 },

    #[error("least-squares design matrix is rank deficient")]
    RankDeficient,

    #[error("negative population {0}")]
    NegativePopulation(f64),

    #[error("histogram contains no counts")]
    EmptyHistogram,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("operator parity disagrees with the closed form by {0:e}")]
    ParityMismatch(f64),
}

impl Error {
    /// True for failures raised by numerical guards (step size, truncation
    /// leakage, spectral continuity and degeneracy checks) as opposed to bad
    /// input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::StepSize { .. }
                | Error::Leakage { .. }
                | Error::Continuity { .. }
                | Error::Degenerate { .. }
                | Error::NearDegenerate { .. }
                | Error::RankDeficient
                | Error::ParityMismatch(_)
                | Error::NotNormalized(_)
                | Error::ComplexExpectation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
