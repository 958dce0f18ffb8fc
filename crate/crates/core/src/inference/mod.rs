//! Forward operator, synthetic data, conjugate posterior and credible intervals.

mod forward;
mod interval;
mod posterior;

use thiserror::Error;

use crate::fem::FemError;
use crate::prior::PriorError;

pub use forward::{
    build_forward_matrix, noiseless_data, synthesize_data, ForwardOperator, Observation, PropagatedBasis,
};
pub use interval::{credible_interval, quantile_type7, CredibleInterval};
pub use posterior::{
    compute_posterior, functional_value, l2_error, posterior_mean_field, sample_posterior, L2Error, PosteriorGaussian,
    PosteriorRecord,
};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
