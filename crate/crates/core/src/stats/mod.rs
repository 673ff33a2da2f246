//! Observables built from samples: local law, rigidity, counting function,
//! level repulsion, gap universality and averaged correlations.

mod bulk;
mod correlation;
mod gaps;
mod local_law;
mod repulsion;
mod rigidity;
mod summary;

use thiserror::Error;

use crate::freeconv::FreeConvError;

pub use bulk::{bulk_index_set, BulkIndexSet};
pub use correlation::{
    averaged_correlation_compare, averaged_observable, CorrelationReport, CorrelationWindow, TestFunction,
};
pub use gaps::{
    gap_universality_distance, ks_bootstrap_interval, ks_null_band, ks_two_sample, rescaled_gaps,
    BootstrapOptions, GapUniversalityReport, MIN_GAP_SAMPLES,
};
pub use local_law::{local_law_check, polylog_threshold, LocalLawPoint, LocalLawReport};
pub use repulsion::{level_repulsion_fit, log_grid, RepulsionReport, MIN_GAP_OBSERVATIONS};
pub use rigidity::{counting_error, rigidity_check, CountingReport, RigidityReport};
pub use summary::{least_squares_slope, quantile_sorted, Summary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("index {index} is outside the bulk")]
    IndexOutOfBulk { index: usize },
    #[error("window [{lo}, {hi}] is not inside the bulk interval [{bulk_lo}, {bulk_hi}]")]
    WindowOutsideBulk {
        lo: f64,
        hi: f64,
        bulk_lo: f64,
        bulk_hi: f64,
    },
    #[error("bulk index set is empty")]
    EmptyBulk,
    #[error("sample has {got} eigenvalues, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    FreeConv(#[from] FreeConvError),
}
