use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A spectral field violates Hermitian symmetry, the zero-mean rule or the truncation.
    #[error("invalid field: {0}")]
    InvalidField(String),

    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The GIG sampler was asked for an index it does not implement.
    #[error("unsupported GIG index lambda = {0}")]
    UnsupportedIndex(f64),

    /// Singular or non-finite linear algebra.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Every unnormalized particle weight underflowed to zero.
    #[error(
        "degenerate weights: total weight underflow with {n_particles} particles \
         (max log-weight {max_log_weight:.3e}, max log-likelihood {max_log_likelihood:.3e})"
    )]
    DegenerateWeights {
        n_particles: usize,
        max_log_weight: f64,
        max_log_likelihood: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}
