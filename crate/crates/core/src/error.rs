use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A distribution parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument to an operation violates its precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested route is not available for this input, e.g. a closed form
    /// for a family that has none.
    #[error("unsupported: {0}")]
    Capability(String),

    /// `n` cannot be written as a sum of sizes in the support of the
    /// cluster-size distribution, so `Pr[E_n] = 0`.
    #[error("n = {n} is unreachable under the cluster-size distribution (Pr[E_n] = 0)")]
    Unreachable { n: usize },

    /// The rejection sampler gave up.
    #[error("rejection sampler exhausted after {attempts} attempts")]
    Exhausted { attempts: u64 },
}
