//! Coupled Dyson Brownian motions, their regularized and short-range
//! variants, and the discrete parabolic equation satisfied by their
//! difference.
//!
//! The integrator works in macroscopic units. Coupled trajectories expose
//! microscopic labels `x_j = N lambda_{k0+j}` and times `N (t - t_start)`.

mod companion;
mod integrator;
mod kernel;
mod setup;

use thiserror::Error;

use crate::freeconv::FreeConvError;
use crate::linalg::LinalgError;

pub use companion::{
    gap_difference, integrate_regularized, integrate_shortrange, path_rigidity_fraction, RegularizedPaths,
    ShortRangePaths,
};
pub use integrator::{integrate_coupled, integrate_dbm, CoupledTrajectory, DbmOptions, DbmTrajectory, IntegrationStats};
pub use kernel::{
    duhamel_residual, evolve_parabolic, holder_check, propagator, DuhamelReport, HolderPoint, HolderReport,
    ParabolicKernel, PropagatorMatrix,
};
pub use setup::{matched_initial_data, CoupledSetup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbmError {
    #[error("step collapse at t = {time}: ordering not restored after {depth} halvings (step {dt_min:e})")]
    StepCollapse { time: f64, depth: u32, dt_min: f64 },
    #[error("initial data must be sorted ascending (entry {index} decreases)")]
    NotSorted { index: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("kernel coefficient B({j}, {l}) is not finite at t = {time}")]
    KernelSingular { time: f64, j: i64, l: i64 },
    #[error("kernel requested on [{from}, {to}] but stored on [{}, {}]", available.0, available.1)]
    KernelRange { from: f64, to: f64, available: (f64, f64) },
    #[error("{0}")]
    InvalidOptions(String),
    #[error(transparent)]
    FreeConv(#[from] FreeConvError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
