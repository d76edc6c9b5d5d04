//! Bivariate von Mises sine-model toolkit.
//!
//! Provides the sine-family density on the torus (and its independent
//! special case), log-scale normalization-constant series with all first
//! and second partial derivatives, exact sampling, Fisher information,
//! minimum-message-length (MML) and MAP point estimation, KL divergences,
//! and finite-mixture modelling with a split/merge/delete model search.
//!
//! All internal likelihood arithmetic is in nats; message lengths are
//! reported in bits.

pub mod estimate;
pub mod kl;
pub mod mixture;
pub mod mml;
pub mod model;
pub mod params;
pub mod sample;
pub mod search;
pub mod series;
pub mod special;
pub mod torus;

mod optim;

pub use estimate::{
    chi_squared_upper_quantile, chi_squared_upper_tail, estimate, likelihood_ratio_test,
    moment_init, rosenblatt_forward, rosenblatt_inverse, EstimatorReport, LrtOutcome, Method,
};
pub use kl::{kl_independent, kl_sine};
pub use mixture::{em_fit, mixture_message_length, EmConfig, EmOutcome, MixtureComponent, MixtureModel};
pub use mml::{
    fisher_single, message_length, prior_density, FisherBlocks, MessageLength, PriorChart,
};
pub use model::{expectations, log_density, negative_log_likelihood, Expectations};
pub use params::{BvmSineParams, Variant};
pub use sample::{sample, sample_von_mises};
pub use search::{
    delete_component, merge_components, search_optimal_mixture, split_component, SearchConfig,
    SearchOutcome, SearchTraceRow,
};
pub use series::{log_norm_constant, log_norm_derivatives, NormDerivatives, SeriesConfig, SignedLog};
pub use torus::{wrap_angle, TorusPoint};

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument was outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series did not satisfy its termination criterion within the
    /// configured term budget. Results are never silently truncated.
    #[error("series did not converge within {max_terms} terms")]
    SeriesNotConverged { max_terms: usize },

    /// An iterative procedure (optimizer, rejection sampler, EM) failed
    /// to make progress within its iteration budget.
    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    /// A Fisher information matrix was not numerically positive definite.
    #[error("ill-conditioned Fisher information: {0}")]
    IllConditioned(String),

    /// The data cannot support the requested estimate (e.g. all points
    /// identical, or too few points for the parameter count).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A mixture component's effective sample count fell below what its
    /// parameter count can support; the caller should delete it.
    #[error("mixture component {index} starved (effective count {n_eff:.3})")]
    ComponentStarved { index: usize, n_eff: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
