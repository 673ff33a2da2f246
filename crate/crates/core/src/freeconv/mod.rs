//! Deformed semicircle law: the self-consistent equation, its density and
//! quantiles, and the matching map to the semicircle.
//!
//! Indices are 0-based throughout: `gamma[i]` is the `(i+1)/N` quantile and
//! pairs with the `i`-th smallest eigenvalue.

mod density;
mod diagnostics;
mod profile;
mod semicircle;
mod solver;

use thiserror::Error;

pub use density::{default_eta_floor, default_grid, solve_mfc_grid, FreeConvolution};
pub use diagnostics::{
    check_regularity, counting_regularity, matching_params, stability_functionals, MatchingParams,
    RegularityReport, RegularityThresholds, StabilityFunctionals,
};
pub use profile::{PotentialProfile, ProfileScales};
pub use semicircle::{
    classical_locations_sc, classical_locations_sc_scaled, semicircle_cdf, semicircle_density,
    semicircle_quantile, semicircle_stieltjes,
};
pub use solver::{solve_mfc, solve_mfc_continued, SolverOptions, SpectralPoint, Time};


#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreeConvError {
    #[error("profile has no entries")]
    EmptyProfile,
    #[error("profile entry {index} is not finite")]
    NonFiniteEntry { index: usize },
    #[error("profile entries must be sorted ascending (entry {index} decreases)")]
    Unsorted { index: usize },
    #[error("profile entry {index} = {value} exceeds the bound {bound}")]
    BoundExceeded { index: usize, value: f64, bound: f64 },
    #[error("ell = {ell} must satisfy 1/N <= ell < 1 (N = {n})")]
    EllOutOfRange { ell: f64, n: usize },
    #[error("regularity separation requires ell < G (ell = {ell}, G = {window})")]
    ScaleOrder { ell: f64, window: f64 },
    #[error("invalid spectral point E = {energy}, eta = {eta}; eta must be positive")]
    InvalidSpectralPoint { energy: f64, eta: f64 },
    #[error("invalid time {0}")]
    InvalidTime(f64),
    #[error("energy grid must have at least two finite, strictly increasing points")]
    InvalidGrid,
    #[error("fixed point not reached at E = {energy}, eta = {eta}: residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        energy: f64,
        eta: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("index {index} is outside the bulk")]
    IndexOutOfBulk { index: usize },
    #[error("index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("profile line {line}: {message}")]
    ProfileParse { line: usize, message: String },
    #[error("{0}")]
    InvalidParameter(String),
}
