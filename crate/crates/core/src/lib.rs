//! Chaining-based concentration toolkit.
//!
//! The crate is organized around five subsystems:
//!
//! - [`young`]: Orlicz-type gauge functions (the `phi_p` family and the
//!   Bernstein gauge), their inverses, subadditivity certificates and
//!   empirical Orlicz norms.
//! - [`chain`]: finite metric spaces, admissible nets built by greedy
//!   farthest-point selection, and the deterministic chaining functionals
//!   (sigma sums, the modulus `tau`, the switch level `k(s,t)`, and their
//!   two-distance generalizations).
//! - [`procsim`]: stochastic process simulation (Gaussian covariance models,
//!   fractional Brownian motion, canonical linear processes), the `Z`
//!   statistic, and pathwise concentration certificates.
//! - [`empsq`]: the empirical square process `S_N`, its `P/Q/R`
//!   decomposition, Bernstein pair tails, and the square-process bound.
//! - [`sensing`]: measurement matrices, restricted isometry constants,
//!   Gaussian order statistics and the RIP tail check.
//!
//! All randomized routines take explicit seeds and derive per-task
//! substreams from a counter-based generator, so every result is
//! reproducible bit-for-bit.

pub mod calib;
pub mod chain;
pub mod empsq;
pub mod procsim;
pub mod sensing;
pub mod young;

/// Errors shared by all subsystems.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// A numeric argument is outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An argument is structurally invalid (empty set, bad index, ...).
    #[error("argument error: {0}")]
    Argument(String),
    /// Input data is malformed (non-square matrix, non-finite samples, ...).
    #[error("data error: {0}")]
    Data(String),
    /// A numeric procedure failed (factorization, non-convergence).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A request exceeds a hard size guard.
    #[error("size error: {0}")]
    Size(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub use chain::{AdmissibleNet, ChainingSequence, FiniteMetricSpace, ModulusReport};
pub use empsq::{FunctionClass, SampleBatch, SquareProcessReport};
pub use procsim::{CertificateReport, ProcessModel, Proposition, SamplePath, ZMode, ZStatistic};
pub use sensing::{MeasurementMatrix, OrderStatReport, RipReport};
pub use young::{EmpiricalOrliczNorm, SubadditivityCertificate, YoungFunction};

/// Seeded ChaCha stream `i` of a master seed.
///
/// Stream separation keeps per-path / per-trial draws independent of how
/// work is batched, so reports do not depend on execution order.
pub fn substream(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
