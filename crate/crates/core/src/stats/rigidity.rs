use rayon::prelude::*;
use serde::Serialize;

use super::bulk::BulkIndexSet;
use super::summary::{quantile_sorted, Summary};
use super::StatsError;
use crate::ensembles::{counting_function, EnsembleSample};
use crate::freeconv::FreeConvolution;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityReport {
    /// Per sample, `max_{i in bulk} N |lambda_i - gamma_i|`.
    pub per_sample_max: Vec<f64>,
    pub summary: Summary,
    /// Median over samples of `N |lambda_i - gamma_i|`, for each bulk index.
    pub per_index_median: Vec<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl RigidityReport {
    /// Mean of `per_index_median` over the central and the outer fifth of the
    /// bulk, in that order.
    pub fn center_and_edge(&self) -> (f64, f64) {
        let m = &self.per_index_median;
        let k = (m.len() / 5).max(1);
        let mid = m.len() / 2;
        let lo = mid.saturating_sub(k / 2);
        let center = mean(&m[lo..(lo + k).min(m.len())]);
        let edge = 0.5 * (mean(&m[..k.min(m.len())]) + mean(&m[m.len().saturating_sub(k)..]));
        (center, edge)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub fn rigidity_check(
    fc: &FreeConvolution,
    samples: &[EnsembleSample],
    bulk: &BulkIndexSet,
    threshold: f64,
) -> Result<RigidityReport, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InsufficientSamples { needed: 1, got: 0 });
    }
    if bulk.is_empty() {
        return Err(StatsError::EmptyBulk);
    }
    let n = fc.n();
    if let Some(s) = samples.iter().find(|s| s.n() != n) {
        return Err(StatsError::SizeMismatch { expected: n, got: s.n() });
    }
    let gamma = &fc.classical_locations()[bulk.range()];
    let nf = n as f64;
    let errors: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| {
            s.eigenvalues[bulk.range()]
                .iter()
                .zip(gamma)
                .map(|(l, g)| nf * (l - g).abs())
                .collect()
        })
        .collect();
    let per_sample_max: Vec<f64> = errors.iter().map(|e| e.iter().copied().fold(0.0, f64::max)).collect();
    let per_index_median = (0..bulk.len())
        .map(|k| {
            let mut col: Vec<f64> = errors.iter().map(|e| e[k]).collect();
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, 0.5)
        })
        .collect();
    let summary = Summary::of(&per_sample_max).ok_or(StatsError::InvalidInput("non-finite eigenvalues".into()))?;
    Ok(RigidityReport {
        pass: summary.median <= threshold,
        per_sample_max,
        summary,
        per_index_median,
        threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingReport {
    /// Per sample, `sup_E N |n(E) - n_fc(E)|` over the window.
    pub per_sample_sup: Vec<f64>,
    pub summary: Summary,
    pub window: (f64, f64),
    pub threshold: f64,
    pub pass: bool,
}

/// Supremum over `[lo, hi]` of `N |n_N(E) - n_fc(E)|`, per sample. The
/// empirical count is a step function and `n_fc` is increasing, so the
/// supremum is attained at a jump (from either side) or at an endpoint.
pub fn counting_error(
    samples: &[EnsembleSample],
    fc: &FreeConvolution,
    window: (f64, f64),
    threshold: f64,
) -> Result<CountingReport, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InsufficientSamples { needed: 1, got: 0 });
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(StatsError::InvalidInput(format!("empty window [{lo}, {hi}]")));
    }
    let per_sample_sup: Vec<f64> = samples
        .par_iter()
        .map(|s| sample_counting_sup(&s.eigenvalues, fc, lo, hi))
        .collect();
    let summary = Summary::of(&per_sample_sup).ok_or(StatsError::InvalidInput("non-finite eigenvalues".into()))?;
    Ok(CountingReport {
        pass: summary.median <= threshold,
        per_sample_sup,
        summary,
        window,
        threshold,
    })
}

fn sample_counting_sup(ev: &[f64], fc: &FreeConvolution, lo: f64, hi: f64) -> f64 {
    let nf = ev.len() as f64;
    let at = |e: f64, count: f64| nf * (count - fc.cdf_at(e)).abs();
    let mut sup = at(lo, counting_function(ev, lo)).max(at(hi, counting_function(ev, hi)));
    let start = ev.partition_point(|&l| l <= lo);
    let end = ev.partition_point(|&l| l <= hi);
    for i in start..end {
        // Left limit has i eigenvalues below, right value i + 1 (ties aside).
        let e = ev[i];
        sup = sup.max(at(e, i as f64 / nf)).max(at(e, counting_function(ev, e)));
    }
    sup
}
