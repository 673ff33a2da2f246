use num_complex::Complex64;
use serde::Serialize;

use super::semicircle::{classical_locations_sc, semicircle_density};
use super::solver::{solve_mfc_continued, FixedPointMap, SolverOptions, SpectralPoint, Time};
use super::{FreeConvError, FreeConvolution, PotentialProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityThresholds {
    /// Lower bound required of `min Im m_V`.
    pub lower: f64,
    /// Upper bound required of `max Im m_V`.
    pub upper: f64,
    pub energies: usize,
    pub etas: usize,
}

impl Default for RegularityThresholds {
    fn default() -> Self {
        RegularityThresholds {
            lower: 0.05,
            upper: 20.0,
            energies: 41,
            etas: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub c_v: f64,
    pub c_v_upper: f64,
    pub pass: bool,
}

/// Scans `Im m_V(E + i eta)` over `E` in `(E0 - qG, E0 + qG)` and `eta`
/// log-spaced in `[ell, 10]`.
pub fn check_regularity(
    profile: &PotentialProfile,
    q: f64,
    thresholds: &RegularityThresholds,
) -> Result<RegularityReport, FreeConvError> {
    if profile.is_empty() {
        return Err(FreeConvError::EmptyProfile);
    }
    let sc = profile.scales();
    if sc.window <= sc.ell {
        return Err(FreeConvError::ScaleOrder {
            ell: sc.ell,
            window: sc.window,
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(FreeConvError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    let ne = thresholds.energies.max(2);
    let nh = thresholds.etas.max(2);
    let half = q * sc.window;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for a in 0..ne {
        // open interval: stay strictly inside the endpoints
        let e = sc.center - half + 2.0 * half * (a as f64 + 0.5) / ne as f64;
        for b in 0..nh {
            let eta = sc.ell * (10.0 / sc.ell).powf(b as f64 / (nh - 1) as f64);
            let im = profile.stieltjes(Complex64::new(e, eta)).im;
            lo = lo.min(im);
            hi = hi.max(im);
        }
    }
    Ok(RegularityReport {
        c_v: lo,
        c_v_upper: hi,
        pass: lo >= thresholds.lower && hi <= thresholds.upper,
    })
}

/// Range of `#{i : V_i in [E - eta, E + eta]} / (N eta)` over the scan grid.
pub fn counting_regularity(profile: &PotentialProfile, q: f64, etas: &[f64]) -> (f64, f64) {
    let sc = profile.scales();
    let half = q * sc.window;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for a in 0..41 {
        let e = sc.center - half + 2.0 * half * (a as f64 + 0.5) / 41.0;
        for &eta in etas {
            let r = profile.fraction_within(e, eta) / eta;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityFunctionals {
    pub m: Complex64,
    pub r2: Complex64,
    pub r3: Complex64,
    /// `1 - tau R_2`, with `tau` the variance of the GOE part.
    pub one_minus_tr2: Complex64,
    pub abs_one_minus_tr2: f64,
    /// `(1/N) sum |g_i|`.
    pub g_abs_mean: f64,
}

/// `R_k = (1/N) sum g_i^k` with `g_i = 1/(s V_i - z - tau m_fc(z))`.
pub fn stability_functionals(
    profile: &PotentialProfile,
    time: Time,
    point: SpectralPoint,
    opts: &SolverOptions,
) -> Result<StabilityFunctionals, FreeConvError> {
    let m = solve_mfc_continued(profile, time, point, opts)?;
    let map = FixedPointMap::new(profile, time, point.z());
    let (r, abs) = map.moments(m);
    let one_minus = Complex64::new(1.0, 0.0) - time.variance() * r[1];
    Ok(StabilityFunctionals {
        m,
        r2: r[1],
        r3: r[2],
        one_minus_tr2: one_minus,
        abs_one_minus_tr2: one_minus.norm(),
        g_abs_mean: abs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingParams {
    pub a: f64,
    pub b: f64,
    pub k0: usize,
    pub j0: usize,
    /// `max_{|j| <= sqrt(N t)} N |mu^{(a,b)}_{j0+j} - gamma_{k0+j}|`.
    pub sweep_max: f64,
    pub sweep_width: usize,
}

/// Affine map `a, b` that matches the semicircle density at `mu_{j0}` to
/// the deformed density at `gamma_{k0}`.
///
/// `k0` must lie in the bulk index set for `q`, and `j0` in
/// `[alpha N, (1 - alpha) N]`.
pub fn matching_params(
    fc: &FreeConvolution,
    k0: usize,
    j0: usize,
    q: f64,
    alpha: f64,
) -> Result<MatchingParams, FreeConvError> {
    let n = fc.n();
    let gamma = fc.classical_locations();
    let sc = fc.profile().scales();
    let inside = |g: f64| (g - sc.center).abs() < q * sc.window;
    if k0 >= n || !inside(gamma[k0]) {
        return Err(FreeConvError::IndexOutOfBulk { index: k0 });
    }
    let jf = j0 as f64;
    if j0 >= n || jf < alpha * n as f64 || jf > (1.0 - alpha) * n as f64 {
        return Err(FreeConvError::IndexOutOfBulk { index: j0 });
    }
    let mu = classical_locations_sc(n);
    let rho_fc = fc.density_at(gamma[k0]);
    if !(rho_fc > 0.0) {
        return Err(FreeConvError::IndexOutOfBulk { index: k0 });
    }
    let a = semicircle_density(mu[j0]) / rho_fc;
    let b = gamma[k0] - a * mu[j0];
    let width = ((n as f64) * fc.time().value()).sqrt().floor() as usize;
    let mut sweep = 0.0_f64;
    for j in -(width as i64)..=(width as i64) {
        let (kj, jj) = (k0 as i64 + j, j0 as i64 + j);
        if kj < 0 || jj < 0 || kj >= n as i64 || jj >= n as i64 {
            continue;
        }
        let d = (a * mu[jj as usize] + b - gamma[kj as usize]).abs();
        sweep = sweep.max(n as f64 * d);
    }
    Ok(MatchingParams {
        a,
        b,
        k0,
        j0,
        sweep_max: sweep,
        sweep_width: width,
    })
}
