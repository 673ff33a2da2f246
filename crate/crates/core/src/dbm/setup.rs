use serde::Serialize;

use super::DbmError;
use crate::ensembles::{sample_deformed, sample_goe_spectrum};
use crate::freeconv::{matching_params, FreeConvolution, MatchingParams};
use crate::rng::RngStream;

const DEFORMED_DOMAIN: u64 = 0x0de;
const GOE_DOMAIN: u64 = 0x90e;

/// Initial data of a matched coupled run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledSetup {
    /// Spectrum of the deformed matrix at the time of `fc`.
    pub x0: Vec<f64>,
    /// Spectrum of `a W + b` for an independent GOE matrix `W`.
    pub y0: Vec<f64>,
    pub matching: MatchingParams,
    pub t_start: f64,
}

/// Samples `x0` exactly in law at the time of `fc` and `y0` from the GOE
/// rescaled so that its density at `mu_{j0}` matches that of `fc` at
/// `gamma_{k0}`.
pub fn matched_initial_data(
    fc: &FreeConvolution,
    k0: usize,
    j0: usize,
    q: f64,
    alpha: f64,
    stream: RngStream,
) -> Result<CoupledSetup, DbmError> {
    let matching = matching_params(fc, k0, j0, q, alpha)?;
    let x = sample_deformed(fc.profile(), fc.time(), stream.with_domain(DEFORMED_DOMAIN))?;
    let y = sample_goe_spectrum(fc.n(), matching.a, matching.b, stream.with_domain(GOE_DOMAIN))?;
    Ok(CoupledSetup {
        x0: x.eigenvalues,
        y0: y.eigenvalues,
        matching,
        t_start: fc.time().value(),
    })
}
