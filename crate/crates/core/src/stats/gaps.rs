use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bulk::BulkIndexSet;
use super::summary::quantile_sorted;
use super::StatsError;
use crate::ensembles::EnsembleSample;
use crate::freeconv::{classical_locations_sc, semicircle_density, FreeConvolution};
use crate::rng::RngStream;

/// Fewest samples per ensemble accepted by [`gap_universality_distance`].
pub const MIN_GAP_SAMPLES: usize = 200;

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    ks_sorted(&a, &b)
}

fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    /// Confidence level of the reported bands, e.g. `0.95`.
    pub level: f64,
    pub stream: RngStream,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: 500,
            level: 0.95,
            stream: RngStream::new(0, 0).with_domain(0xb007),
        }
    }
}

/// Upper `level` quantile of the KS statistic under random relabelling of the
/// pooled samples, i.e. the distance expected when both sets share a law.
pub fn ks_null_band(a: &[f64], b: &[f64], opts: &BootstrapOptions) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut stats: Vec<f64> = (0..opts.resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = opts.stream.index(r).rng();
            let mut p = pooled.clone();
            p.shuffle(&mut rng);
            ks_two_sample(&p[..a.len()], &p[a.len()..])
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    quantile_sorted(&stats, opts.level)
}

/// Equal-tailed bootstrap interval for the KS distance between the laws of
/// `a` and `b`, resampling each set with replacement.
pub fn ks_bootstrap_interval(a: &[f64], b: &[f64], opts: &BootstrapOptions) -> (f64, f64) {
    let mut stats: Vec<f64> = (0..opts.resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = opts.stream.with_domain(opts.stream.domain ^ 0xc1).index(r).rng();
            let ra = resample(a, &mut rng);
            let rb = resample(b, &mut rng);
            ks_two_sample(&ra, &rb)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - opts.level);
    (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
}

pub(crate) fn resample<R: Rng>(v: &[f64], rng: &mut R) -> Vec<f64> {
    (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect()
}

/// `N rho (lambda_{i+1} - lambda_i)` for each sample.
pub fn rescaled_gaps(samples: &[EnsembleSample], index: usize, density: f64) -> Result<Vec<f64>, StatsError> {
    samples
        .iter()
        .map(|s| {
            let n = s.n();
            if index + 1 >= n {
                return Err(StatsError::SizeMismatch { expected: index + 2, got: n });
            }
            Ok(n as f64 * density * (s.eigenvalues[index + 1] - s.eigenvalues[index]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapUniversalityReport {
    pub ks: f64,
    pub null_band: f64,
    pub ks_interval: (f64, f64),
    pub deformed_density: f64,
    pub goe_density: f64,
    pub deformed_gaps: Vec<f64>,
    pub goe_gaps: Vec<f64>,
}

impl GapUniversalityReport {
    pub fn within_null(&self, factor: f64) -> bool {
        self.ks <= factor * self.null_band
    }
}

/// KS distance between rescaled gaps at `k0` in the deformed ensemble and at
/// `j0` in GOE (unit semicircle).
pub fn gap_universality_distance(
    deformed: &[EnsembleSample],
    goe: &[EnsembleSample],
    k0: usize,
    j0: usize,
    fc: &FreeConvolution,
    bulk: &BulkIndexSet,
    opts: &BootstrapOptions,
) -> Result<GapUniversalityReport, StatsError> {
    for got in [deformed.len(), goe.len()] {
        if got < MIN_GAP_SAMPLES {
            return Err(StatsError::InsufficientSamples { needed: MIN_GAP_SAMPLES, got });
        }
    }
    if !bulk.contains(k0) || !bulk.contains(k0 + 1) {
        return Err(StatsError::IndexOutOfBulk { index: k0 });
    }
    let n_goe = goe[0].n();
    if j0 + 1 >= n_goe {
        return Err(StatsError::IndexOutOfBulk { index: j0 });
    }
    let mu = classical_locations_sc(n_goe)[j0];
    if mu.abs() >= 2.0 * bulk.q {
        return Err(StatsError::IndexOutOfBulk { index: j0 });
    }
    let deformed_density = fc.density_at(fc.classical_locations()[k0]);
    let goe_density = semicircle_density(mu);
    let deformed_gaps = rescaled_gaps(deformed, k0, deformed_density)?;
    let goe_gaps = rescaled_gaps(goe, j0, goe_density)?;
    Ok(GapUniversalityReport {
        ks: ks_two_sample(&deformed_gaps, &goe_gaps),
        null_band: ks_null_band(&deformed_gaps, &goe_gaps, opts),
        ks_interval: ks_bootstrap_interval(&deformed_gaps, &goe_gaps, opts),
        deformed_density,
        goe_density,
        deformed_gaps,
        goe_gaps,
    })
}
