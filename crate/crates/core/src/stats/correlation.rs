use libm::erf;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::gaps::BootstrapOptions;
use super::StatsError;
use crate::ensembles::EnsembleSample;

/// Test functions for the averaged correlation observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TestFunction {
    /// `exp(-|alpha|^2 / (2 w^2))` in every rescaled coordinate.
    GaussianBump { width: f64 },
}

impl TestFunction {
    fn width(&self) -> f64 {
        match *self {
            TestFunction::GaussianBump { width } => width,
        }
    }
}

/// Averaging window `[center - half_width, center + half_width]` of one
/// ensemble, with the density used to rescale eigenvalues and the bulk
/// interval the window must lie in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationWindow {
    pub center: f64,
    pub half_width: f64,
    pub density: f64,
    pub bulk: (f64, f64),
}

impl CorrelationWindow {
    fn validate(&self) -> Result<(), StatsError> {
        let (lo, hi) = (self.center - self.half_width, self.center + self.half_width);
        if !(self.half_width > 0.0 && self.density > 0.0) {
            return Err(StatsError::InvalidInput("window needs positive half width and density".into()));
        }
        if lo <= self.bulk.0 || hi >= self.bulk.1 {
            return Err(StatsError::WindowOutsideBulk {
                lo,
                hi,
                bulk_lo: self.bulk.0,
                bulk_hi: self.bulk.1,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub order: usize,
    pub deformed_value: f64,
    pub goe_value: f64,
    pub difference: f64,
    /// Bootstrap standard deviation of `difference`.
    pub sigma: f64,
}

impl CorrelationReport {
    pub fn within_sigmas(&self, k: f64) -> bool {
        self.difference.abs() <= k * self.sigma
    }
}

/// Per-sample value of
/// `(1/2b) int_{E-b}^{E+b} sum O(N rho (lambda_{i_1} - E'), ...) dE'`
/// over distinct tuples, evaluated in closed form for Gaussian bumps.
pub fn averaged_observable(eigenvalues: &[f64], window: &CorrelationWindow, test: TestFunction, order: usize) -> f64 {
    let n = eigenvalues.len() as f64;
    let scale = n * window.density;
    let big_b = scale * window.half_width;
    let w = test.width();
    let reach = big_b + 10.0 * w;
    let xs: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| scale * (l - window.center))
        .filter(|x| x.abs() <= reach)
        .collect();
    let sqrt2 = std::f64::consts::SQRT_2;
    let sum = match order {
        1 => {
            let c = w * (std::f64::consts::PI / 2.0).sqrt();
            xs.iter()
                .map(|&x| c * (erf((big_b - x) / (w * sqrt2)) + erf((big_b + x) / (w * sqrt2))))
                .sum::<f64>()
        }
        _ => {
            // |x_i - u|^2 + |x_j - u|^2 = 2 (u - m)^2 + (x_i - x_j)^2 / 2.
            let c = 0.5 * w * std::f64::consts::PI.sqrt();
            let mut acc = 0.0;
            for (i, &xi) in xs.iter().enumerate() {
                for &xj in &xs[i + 1..] {
                    let d = xj - xi;
                    if d > 12.0 * w {
                        break;
                    }
                    let m = 0.5 * (xi + xj);
                    let u = c * (erf((big_b - m) / w) + erf((big_b + m) / w));
                    acc += 2.0 * (-d * d / (4.0 * w * w)).exp() * u;
                }
            }
            acc
        }
    };
    sum / (2.0 * big_b)
}

/// Difference of the energy-averaged `order`-point observable between the two
/// ensembles, with a bootstrap error over samples.
pub fn averaged_correlation_compare(
    deformed: &[EnsembleSample],
    goe: &[EnsembleSample],
    deformed_window: &CorrelationWindow,
    goe_window: &CorrelationWindow,
    test: TestFunction,
    order: usize,
    opts: &BootstrapOptions,
) -> Result<CorrelationReport, StatsError> {
    if !(1..=2).contains(&order) {
        return Err(StatsError::InvalidInput(format!("correlation order {order} not in {{1, 2}}")));
    }
    for got in [deformed.len(), goe.len()] {
        if got < 2 {
            return Err(StatsError::InsufficientSamples { needed: 2, got });
        }
    }
    deformed_window.validate()?;
    goe_window.validate()?;
    let values = |set: &[EnsembleSample], win: &CorrelationWindow| -> Vec<f64> {
        set.par_iter()
            .map(|s| averaged_observable(&s.eigenvalues, win, test, order))
            .collect()
    };
    let a = values(deformed, deformed_window);
    let b = values(goe, goe_window);
    let deformed_value = mean(&a);
    let goe_value = mean(&b);
    let diffs: Vec<f64> = (0..opts.resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = opts.stream.with_domain(opts.stream.domain ^ 0xc0).index(r).rng();
            resampled_mean(&a, &mut rng) - resampled_mean(&b, &mut rng)
        })
        .collect();
    let dm = mean(&diffs);
    let var = diffs.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (diffs.len().max(2) - 1) as f64;
    Ok(CorrelationReport {
        order,
        deformed_value,
        goe_value,
        difference: deformed_value - goe_value,
        sigma: var.sqrt(),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn resampled_mean<R: Rng>(v: &[f64], rng: &mut R) -> f64 {
    (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> CorrelationWindow {
        CorrelationWindow {
            center: 0.0,
            half_width: 0.05,
            density: 1.0,
            bulk: (-1.0, 1.0),
        }
    }

    #[test]
    fn one_point_matches_quadrature() {
        let ev = [-0.03, -0.001, 0.0004, 0.02, 0.07];
        let test = TestFunction::GaussianBump { width: 0.7 };
        let win = window();
        let closed = averaged_observable(&ev, &win, test, 1);
        let n = ev.len() as f64;
        let steps = 20000;
        let h = 2.0 * win.half_width / steps as f64;
        let mut quad = 0.0;
        for k in 0..steps {
            let e = -win.half_width + (k as f64 + 0.5) * h;
            quad += ev
                .iter()
                .map(|&l| (-(n * (l - e)).powi(2) / (2.0 * 0.49)).exp())
                .sum::<f64>()
                * h;
        }
        quad /= 2.0 * win.half_width;
        assert!((closed - quad).abs() < 1e-8, "{closed} vs {quad}");
    }

    #[test]
    fn two_point_matches_quadrature() {
        let ev = [-0.02, -0.001, 0.0004, 0.01];
        let test = TestFunction::GaussianBump { width: 0.4 };
        let win = CorrelationWindow { density: 40.0, ..window() };
        let closed = averaged_observable(&ev, &win, test, 2);
        let s = ev.len() as f64 * win.density;
        let steps = 20000;
        let h = 2.0 * win.half_width / steps as f64;
        let mut quad = 0.0;
        for k in 0..steps {
            let e = -win.half_width + (k as f64 + 0.5) * h;
            for i in 0..ev.len() {
                for j in 0..ev.len() {
                    if i != j {
                        let (a, b) = (s * (ev[i] - e), s * (ev[j] - e));
                        quad += (-(a * a + b * b) / (2.0 * 0.16)).exp() * h;
                    }
                }
            }
        }
        quad /= 2.0 * win.half_width;
        assert!((closed - quad).abs() < 1e-8 * quad.max(1.0), "{closed} vs {quad}");
    }

    #[test]
    fn window_must_sit_in_bulk() {
        let w = CorrelationWindow { center: 0.98, ..window() };
        assert!(matches!(w.validate(), Err(StatsError::WindowOutsideBulk { .. })));
    }
}
