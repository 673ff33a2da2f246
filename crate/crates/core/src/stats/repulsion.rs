use serde::Serialize;

use super::bulk::BulkIndexSet;
use super::summary::least_squares_slope;
use super::StatsError;
use crate::ensembles::EnsembleSample;

/// Fewest pooled gap observations accepted by [`level_repulsion_fit`].
pub const MIN_GAP_OBSERVATIONS: usize = 10_000;

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepulsionReport {
    pub eps: Vec<f64>,
    /// `P[N gap <= eps]` over pooled nearest-neighbour bulk gaps.
    pub gap_cdf: Vec<f64>,
    /// `P[N gap <= 2 eps]`, the comparison curve for the interval observable.
    pub gap_cdf_double: Vec<f64>,
    /// `P[N_I >= 2]` for `I = [E - eps/N, E + eps/N]`, averaged over centers.
    pub interval_two: Vec<f64>,
    /// Log-log slope of `gap_cdf` over the fit window; two for GOE.
    pub exponent: Option<f64>,
    /// Log-log slope of `interval_two`; three for GOE.
    pub interval_exponent: Option<f64>,
    pub fit_window: (f64, f64),
    pub gap_observations: usize,
    pub interval_observations: usize,
}

impl RepulsionReport {
    /// Whether the interval observable stays below the doubled-gap CDF at
    /// every grid point.
    pub fn interval_dominated(&self) -> bool {
        self.interval_two
            .iter()
            .zip(&self.gap_cdf_double)
            .all(|(a, b)| a <= b)
    }

    pub fn exponent_within(&self, lo: f64, hi: f64) -> bool {
        self.exponent.is_some_and(|e| (lo..=hi).contains(&e))
    }
}

/// Empirical small-gap probabilities of bulk eigenvalues and their log-log
/// exponents. Gaps `lambda_{i+1} - lambda_i` are pooled over `i, i+1` in
/// `bulk` and over samples; `centers` are the energies for the interval
/// observable.
pub fn level_repulsion_fit(
    samples: &[EnsembleSample],
    bulk: &BulkIndexSet,
    eps_grid: &[f64],
    centers: &[f64],
    fit_window: (f64, f64),
) -> Result<RepulsionReport, StatsError> {
    if bulk.len() < 2 {
        return Err(StatsError::EmptyBulk);
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(StatsError::InvalidInput("eps grid must be non-empty and positive".into()));
    }
    let mut gaps = Vec::with_capacity(samples.len() * bulk.len());
    for s in samples {
        if s.n() < bulk.end {
            return Err(StatsError::SizeMismatch { expected: bulk.end, got: s.n() });
        }
        let nf = s.n() as f64;
        gaps.extend(s.eigenvalues[bulk.range()].windows(2).map(|w| nf * (w[1] - w[0])));
    }
    if gaps.len() < MIN_GAP_OBSERVATIONS {
        return Err(StatsError::InsufficientSamples { needed: MIN_GAP_OBSERVATIONS, got: gaps.len() });
    }
    gaps.sort_by(f64::total_cmp);
    let cdf = |x: f64| gaps.partition_point(|&g| g <= x) as f64 / gaps.len() as f64;
    let gap_cdf: Vec<f64> = eps_grid.iter().map(|&e| cdf(e)).collect();
    let gap_cdf_double: Vec<f64> = eps_grid.iter().map(|&e| cdf(2.0 * e)).collect();

    let interval_observations = samples.len() * centers.len();
    let interval_two: Vec<f64> = eps_grid
        .iter()
        .map(|&eps| {
            if interval_observations == 0 {
                return 0.0;
            }
            let hits: usize = samples
                .iter()
                .map(|s| {
                    let r = eps / s.n() as f64;
                    centers
                        .iter()
                        .filter(|&&c| {
                            let lo = s.eigenvalues.partition_point(|&l| l < c - r);
                            let hi = s.eigenvalues.partition_point(|&l| l <= c + r);
                            hi - lo >= 2
                        })
                        .count()
                })
                .sum();
            hits as f64 / interval_observations as f64
        })
        .collect();

    Ok(RepulsionReport {
        exponent: fit(eps_grid, &gap_cdf, fit_window),
        interval_exponent: fit(eps_grid, &interval_two, fit_window),
        eps: eps_grid.to_vec(),
        gap_cdf,
        gap_cdf_double,
        interval_two,
        fit_window,
        gap_observations: gaps.len(),
        interval_observations,
    })
}

fn fit(eps: &[f64], p: &[f64], (lo, hi): (f64, f64)) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(p)
        .filter(|(&e, &q)| e >= lo && e <= hi && q > 0.0)
        .map(|(e, q)| (e.ln(), q.ln()))
        .collect();
    least_squares_slope(&pts)
}
