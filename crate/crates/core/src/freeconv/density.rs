use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::solver::{solve_mfc, SolverOptions, SpectralPoint, Time};
use super::{FreeConvError, PotentialProfile};

/// Density, cumulative distribution and classical locations of the deformed
/// semicircle law on an energy grid.
#[derive(Clone, Debug)]
pub struct FreeConvolution {
    profile: Arc<PotentialProfile>,
    time: Time,
    eta_floor: f64,
    energies: Vec<f64>,
    stieltjes: Vec<Complex64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
    cdf_slopes: Vec<f64>,
    mass: f64,
    classical: Vec<f64>,
}

/// Default floor `1e-3 * min(1, t)`; at zero time the regularity scale
/// stands in for `t`.
pub fn default_eta_floor(profile: &PotentialProfile, time: Time) -> f64 {
    let t = if time.is_zero() {
        profile.scales().ell
    } else {
        time.value()
    };
    1e-3 * t.min(1.0)
}

/// Uniform grid covering the support `[s min V - 2 sqrt(tau), s max V + 2 sqrt(tau)]`
/// with a margin.
pub fn default_grid(profile: &PotentialProfile, time: Time, points: usize) -> Vec<f64> {
    let s = time.scale();
    let r = 2.0 * time.variance().sqrt();
    let e = profile.entries();
    let lo = s * e[0] - r;
    let hi = s * e[e.len() - 1] + r;
    let pad = 0.1 * (hi - lo).max(0.5);
    let (lo, hi) = (lo - pad, hi + pad);
    let points = points.max(2);
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

/// Solves on every grid energy with `eta` descending geometrically
/// (factor 0.7) from 1 to `eta_floor`, each rung warm-started from the
/// previous one, then integrates the density and inverts it at `i/N`.
pub fn solve_mfc_grid(
    profile: Arc<PotentialProfile>,
    time: Time,
    grid: &[f64],
    eta_floor: Option<f64>,
    opts: &SolverOptions,
) -> Result<FreeConvolution, FreeConvError> {
    time.validate()?;
    if grid.len() < 2 || grid.iter().any(|e| !e.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FreeConvError::InvalidGrid);
    }
    let eta_floor = eta_floor.unwrap_or_else(|| default_eta_floor(&profile, time));
    if !(eta_floor > 0.0) || !eta_floor.is_finite() {
        return Err(FreeConvError::InvalidSpectralPoint {
            energy: grid[0],
            eta: eta_floor,
        });
    }
    let stieltjes = grid
        .par_iter()
        .map(|&e| {
            let mut guess = None;
            let mut eta = 1.0_f64.max(eta_floor);
            while eta > eta_floor {
                guess = Some(solve_mfc(&profile, time, SpectralPoint::new(e, eta)?, opts, guess)?);
                eta *= 0.7;
            }
            solve_mfc(&profile, time, SpectralPoint::new(e, eta_floor)?, opts, guess)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FreeConvolution::assemble(profile, time, eta_floor, grid.to_vec(), stieltjes))
}

impl FreeConvolution {
    /// Convenience wrapper over [`solve_mfc_grid`] with the default grid.
    pub fn compute(
        profile: Arc<PotentialProfile>,
        time: Time,
        points: usize,
        opts: &SolverOptions,
    ) -> Result<Self, FreeConvError> {
        let grid = default_grid(&profile, time, points);
        solve_mfc_grid(profile, time, &grid, None, opts)
    }

    fn assemble(
        profile: Arc<PotentialProfile>,
        time: Time,
        eta_floor: f64,
        energies: Vec<f64>,
        stieltjes: Vec<Complex64>,
    ) -> Self {
        let density: Vec<f64> = stieltjes.iter().map(|m| m.im / PI).collect();
        let k = energies.len();
        // Poisson smoothing shifts the distribution function by roughly
        // (eta/pi) Re m(E); removing that term also accounts for the tail
        // mass left of the grid.
        let shift = |i: usize| eta_floor / PI * stieltjes[i].re;
        let mut raw = vec![0.0; k];
        let mut acc = 0.0;
        for i in 1..k {
            acc += 0.5 * (density[i] + density[i - 1]) * (energies[i] - energies[i - 1]);
            raw[i] = acc;
        }
        let mut cdf: Vec<f64> = (0..k).map(|i| shift(0) + raw[i] - shift(i)).collect();
        let mut run = f64::NEG_INFINITY;
        for c in cdf.iter_mut() {
            run = run.max(*c);
            *c = run.max(0.0);
        }
        let mass = cdf[k - 1];
        if mass > 0.0 {
            for c in cdf.iter_mut() {
                *c = (*c / mass).min(1.0);
            }
        }
        let cdf_slopes = pchip_slopes(&energies, &cdf);
        let mut fc = FreeConvolution {
            profile,
            time,
            eta_floor,
            energies,
            stieltjes,
            density,
            cdf,
            cdf_slopes,
            mass,
            classical: Vec::new(),
        };
        let n = fc.profile.len();
        fc.classical = (0..n)
            .map(|i| fc.quantile((i + 1) as f64 / n as f64))
            .collect();
        fc
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn shared_profile(&self) -> Arc<PotentialProfile> {
        Arc::clone(&self.profile)
    }

    pub fn time(&self) -> Time {
        self.time
    }

    pub fn eta_floor(&self) -> f64 {
        self.eta_floor
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn stieltjes_values(&self) -> &[Complex64] {
        &self.stieltjes
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Normalized cumulative distribution at the grid energies.
    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// Total mass before normalization; close to one when the grid covers
    /// the support.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn n(&self) -> usize {
        self.profile.len()
    }

    /// `gamma_i`, the `(i+1)/N` quantile, for `i` in `0..N`.
    pub fn classical_locations(&self) -> &[f64] {
        &self.classical
    }

    /// Index `i` whose classical location is closest to `e`.
    pub fn index_near(&self, e: f64) -> usize {
        let g = &self.classical;
        let j = g.partition_point(|&x| x < e);
        if j == 0 {
            0
        } else if j >= g.len() {
            g.len() - 1
        } else if (g[j] - e).abs() < (e - g[j - 1]).abs() {
            j
        } else {
            j - 1
        }
    }

    /// Linear interpolation of the density; zero outside the grid.
    pub fn density_at(&self, e: f64) -> f64 {
        interpolate(&self.energies, &self.density, e).unwrap_or(0.0)
    }

    /// Linear interpolation of the Stieltjes transform at the floor.
    pub fn stieltjes_at(&self, e: f64) -> Option<Complex64> {
        let k = self.energies.len();
        if e < self.energies[0] || e > self.energies[k - 1] {
            return None;
        }
        let j = self.energies.partition_point(|&x| x <= e).clamp(1, k - 1);
        let (e0, e1) = (self.energies[j - 1], self.energies[j]);
        let w = (e - e0) / (e1 - e0);
        Some(self.stieltjes[j - 1] * (1.0 - w) + self.stieltjes[j] * w)
    }

    /// Monotone cubic interpolation of the distribution function.
    pub fn cdf_at(&self, e: f64) -> f64 {
        let k = self.energies.len();
        if e <= self.energies[0] {
            return 0.0;
        }
        if e >= self.energies[k - 1] {
            return 1.0;
        }
        let j = self.energies.partition_point(|&x| x <= e).clamp(1, k - 1);
        self.hermite(j - 1, e)
    }

    fn hermite(&self, j: usize, e: f64) -> f64 {
        let (x0, x1) = (self.energies[j], self.energies[j + 1]);
        let h = x1 - x0;
        let s = (e - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.cdf[j] + h10 * h * self.cdf_slopes[j] + h01 * self.cdf[j + 1] + h11 * h * self.cdf_slopes[j + 1]
    }

    /// Smallest energy at which the interpolated distribution reaches `p`,
    /// located by bisection to `1e-12`.
    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.energies.len();
        if p <= 0.0 {
            return self.energies[0];
        }
        let j = self.cdf.partition_point(|&c| c < p);
        if j == 0 {
            return self.energies[0];
        }
        if j >= k {
            return self.energies[k - 1];
        }
        let (mut lo, mut hi) = (self.energies[j - 1], self.energies[j]);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(j - 1, mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Largest `|rho'|` on the grid points inside `[lo, hi]`, by centered
    /// differences.
    pub fn max_density_slope(&self, lo: f64, hi: f64) -> f64 {
        let e = &self.energies;
        (1..e.len() - 1)
            .filter(|&i| e[i] >= lo && e[i] <= hi)
            .map(|i| ((self.density[i + 1] - self.density[i - 1]) / (e[i + 1] - e[i - 1])).abs())
            .fold(0.0, f64::max)
    }

    /// `(min rho, max rho)` over grid points inside `[lo, hi]`.
    pub fn density_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        self.energies
            .iter()
            .zip(&self.density)
            .filter(|(&e, _)| e >= lo && e <= hi)
            .fold((f64::INFINITY, 0.0_f64), |(a, b), (_, &r)| (a.min(r), b.max(r)))
    }

    /// Time derivative of `gamma_i` along the flow, from the Stieltjes
    /// transform at `gamma_i + i eta_floor`: `-Re m - gamma/2` for the
    /// Ornstein-Uhlenbeck form, `-Re m` for the additive form.
    pub fn gamma_time_derivative(&self, i: usize, opts: &SolverOptions) -> Result<f64, FreeConvError> {
        let gamma = *self
            .classical
            .get(i)
            .ok_or(FreeConvError::IndexOutOfRange { index: i, n: self.n() })?;
        let point = SpectralPoint::new(gamma, self.eta_floor)?;
        let guess = self.stieltjes_at(gamma);
        let m = match solve_mfc(&self.profile, self.time, point, opts, guess) {
            Ok(m) => m,
            Err(_) => super::solve_mfc_continued(&self.profile, self.time, point, opts)?,
        };
        Ok(match self.time {
            Time::Ou(_) => -m.re - 0.5 * gamma,
            Time::Additive(_) => -m.re,
        })
    }
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let k = x.len();
    if at < x[0] || at > x[k - 1] {
        return None;
    }
    let j = x.partition_point(|&v| v <= at).clamp(1, k - 1);
    let w = (at - x[j - 1]) / (x[j] - x[j - 1]);
    Some(y[j - 1] * (1.0 - w) + y[j] * w)
}

/// Fritsch-Carlson slopes for a monotone piecewise cubic Hermite interpolant.
pub(crate) fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let k = x.len();
    let h: Vec<f64> = (0..k - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..k - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; k];
    if k == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for i in 1..k - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v * d0 <= 0.0 {
            v = 0.0;
        } else if d0 * d1 <= 0.0 && v.abs() > (3.0 * d0).abs() {
            v = 3.0 * d0;
        }
        v
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[k - 1] = end(h[k - 2], h[k - 3], delta[k - 2], delta[k - 3]);
    d
}
