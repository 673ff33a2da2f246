use std::f64::consts::PI;

use num_complex::Complex64;

/// `rho_sc(E) = sqrt(4 - E^2) / (2 pi)` on `[-2, 2]`.
pub fn semicircle_density(e: f64) -> f64 {
    if e.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - e * e).sqrt() / (2.0 * PI)
    }
}

/// Closed-form distribution function of the semicircle law.
pub fn semicircle_cdf(e: f64) -> f64 {
    if e <= -2.0 {
        0.0
    } else if e >= 2.0 {
        1.0
    } else {
        (e * (4.0 - e * e).sqrt() + 4.0 * (e / 2.0).asin()) / (4.0 * PI) + 0.5
    }
}

/// `(-z + sqrt(z^2 - 4)) / 2` on the branch with positive imaginary part.
pub fn semicircle_stieltjes(z: Complex64) -> Complex64 {
    let r = (z * z - 4.0).sqrt();
    let m = (-z + r) / 2.0;
    if m.im > 0.0 {
        m
    } else {
        (-z - r) / 2.0
    }
}

/// The `p`-quantile of the semicircle law, by safeguarded Newton steps on
/// the closed-form distribution function.
pub fn semicircle_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return -2.0;
    }
    if p >= 1.0 {
        return 2.0;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -semicircle_quantile(1.0 - p);
    }
    let (mut lo, mut hi) = (-2.0_f64, 0.0_f64);
    let mut x = -1.0;
    for _ in 0..200 {
        let f = semicircle_cdf(x) - p;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = semicircle_density(x);
        let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

/// `mu_1, ..., mu_N`: the `i/N` quantiles of the semicircle law (0-based).
pub fn classical_locations_sc(n: usize) -> Vec<f64> {
    (1..=n).map(|i| semicircle_quantile(i as f64 / n as f64)).collect()
}

/// Quantiles `mu^{(a,b)}_k` of the rescaled density
/// `rho_sc((E - b)/a)/a` on `[-2a + b, 2a + b]`.
pub fn classical_locations_sc_scaled(n: usize, a: f64, b: f64) -> Vec<f64> {
    classical_locations_sc(n).into_iter().map(|mu| a * mu + b).collect()
}
