use rayon::prelude::*;
use serde::Serialize;

use super::summary::{least_squares_slope, quantile_sorted};
use super::StatsError;
use crate::ensembles::{empirical_stieltjes, EnsembleSample};
use crate::freeconv::{solve_mfc_continued, PotentialProfile, SolverOptions, SpectralPoint, Time};

/// `(log N)^power`, the polylogarithmic threshold used for pass/fail.
pub fn polylog_threshold(n: usize, power: f64) -> f64 {
    (n as f64).ln().powf(power)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLawPoint {
    pub energy: f64,
    pub eta: f64,
    pub median_abs_error: f64,
    /// Largest `N eta |m_N - m_fc|` over samples.
    pub max_scaled_error: f64,
    pub median_scaled_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLawReport {
    pub sup_scaled_error: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Log-log slope of `|m_N - m_fc|` against `eta`, from the median over
    /// energies of the per-point medians at each `eta`.
    pub eta_slope: Option<f64>,
    pub points: Vec<LocalLawPoint>,
}

/// Compares empirical Stieltjes transforms with `m_fc` on `grid`.
pub fn local_law_check(
    profile: &PotentialProfile,
    time: Time,
    samples: &[EnsembleSample],
    grid: &[SpectralPoint],
    threshold: f64,
    opts: &SolverOptions,
) -> Result<LocalLawReport, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = profile.len();
    if let Some(s) = samples.iter().find(|s| s.n() != n) {
        return Err(StatsError::SizeMismatch { expected: n, got: s.n() });
    }
    let points = grid
        .par_iter()
        .map(|&pt| -> Result<LocalLawPoint, StatsError> {
            let m_fc = solve_mfc_continued(profile, time, pt, opts)?;
            let mut errs: Vec<f64> = samples
                .iter()
                .map(|s| (empirical_stieltjes(&s.eigenvalues, pt.z()) - m_fc).norm())
                .collect();
            errs.sort_by(f64::total_cmp);
            let scale = n as f64 * pt.eta;
            let med = quantile_sorted(&errs, 0.5);
            Ok(LocalLawPoint {
                energy: pt.energy,
                eta: pt.eta,
                median_abs_error: med,
                max_scaled_error: scale * errs[errs.len() - 1],
                median_scaled_error: scale * med,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sup = points.iter().map(|p| p.max_scaled_error).fold(0.0, f64::max);
    Ok(LocalLawReport {
        sup_scaled_error: sup,
        threshold,
        pass: sup <= threshold,
        eta_slope: eta_slope(&points),
        points,
    })
}

fn eta_slope(points: &[LocalLawPoint]) -> Option<f64> {
    let mut etas: Vec<f64> = points.iter().map(|p| p.eta).collect();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    if etas.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = etas
        .iter()
        .filter_map(|&eta| {
            let mut v: Vec<f64> = points
                .iter()
                .filter(|p| p.eta == eta)
                .map(|p| p.median_abs_error)
                .collect();
            v.sort_by(f64::total_cmp);
            let m = quantile_sorted(&v, 0.5);
            (m > 0.0).then(|| (eta.ln(), m.ln()))
        })
        .collect();
    least_squares_slope(&pts)
}
