//! Library half of the `bvm` binary: dataset ingestion, null-model
//! baselines, estimator benchmarks, mixture runs, and contour export.

pub mod benchmark;
pub mod contour;
pub mod ingest;
pub mod mixrun;
pub mod null;

pub use benchmark::{run_estimator_benchmark, BenchmarkConfig, CellSummary};
pub use contour::{component_contours, contour_csv, ContourRing};
pub use ingest::{ingest, AngleDataset, AngleUnit};
pub use mixrun::{run_mixture, MixtureRun};
pub use null::{uniform_null_bits, NullModelReport};

/// A problem with user-supplied input (file contents, flags, config),
/// as opposed to a numerical failure inside the fitting machinery.
/// The binary maps this to exit code 1 and everything else to 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

/// Exit code for an [`anyhow`] error chain: 1 for input problems,
/// 2 for numerical or convergence failures.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<std::io::Error>() {
            return 1;
        }
    }
    2
}
