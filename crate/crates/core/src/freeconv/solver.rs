use num_complex::Complex64;
use serde::Serialize;

use super::{FreeConvError, PotentialProfile};

/// Deformation time.
///
/// `Ou(t)` is the Ornstein-Uhlenbeck form `e^{-t/2} V + sqrt(1 - e^{-t}) W`.
/// `Additive(T)` is `V + sqrt(T) W`. Both reduce to the self-consistent
/// equation `m = (1/N) sum 1/(s V_i - z - tau m)` with `s = scale()` and
/// `tau = variance()`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Time {
    Ou(f64),
    Additive(f64),
}

impl Time {
    /// Coefficient in front of `V`.
    pub fn scale(&self) -> f64 {
        match *self {
            Time::Ou(t) => (-0.5 * t).exp(),
            Time::Additive(_) => 1.0,
        }
    }

    /// Variance multiplier of the GOE part.
    pub fn variance(&self) -> f64 {
        match *self {
            Time::Ou(t) => -(-t).exp_m1(),
            Time::Additive(t) => t,
        }
    }

    /// The raw time parameter.
    pub fn value(&self) -> f64 {
        match *self {
            Time::Ou(t) | Time::Additive(t) => t,
        }
    }

    pub fn validate(&self) -> Result<(), FreeConvError> {
        let t = self.value();
        if t.is_nan() || t < 0.0 || (matches!(self, Time::Additive(_)) && t.is_infinite()) {
            return Err(FreeConvError::InvalidTime(t));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.variance() == 0.0
    }
}

/// A point `z = E + i eta` in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralPoint {
    pub energy: f64,
    pub eta: f64,
}

impl SpectralPoint {
    pub fn new(energy: f64, eta: f64) -> Result<Self, FreeConvError> {
        if !(eta > 0.0) || !eta.is_finite() || !energy.is_finite() {
            return Err(FreeConvError::InvalidSpectralPoint { energy, eta });
        }
        Ok(SpectralPoint { energy, eta })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.energy, self.eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Absolute residual `|m - F(m)|` accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor of the fixed-point iteration.
    pub theta_min: f64,
    /// Residual below which Newton polishing is attempted.
    pub newton_switch: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 10_000,
            theta_min: 0.1,
            newton_switch: 1e-4,
        }
    }
}

/// The map `F(m) = sum_k w_k / (s v_k - z - tau m)` and its derivative.
pub(crate) struct FixedPointMap<'a> {
    atoms: &'a [(f64, f64)],
    s: f64,
    tau: f64,
    z: Complex64,
}

impl<'a> FixedPointMap<'a> {
    pub(crate) fn new(profile: &'a PotentialProfile, time: Time, z: Complex64) -> Self {
        FixedPointMap {
            atoms: profile.atoms(),
            s: time.scale(),
            tau: time.variance(),
            z,
        }
    }

    /// Returns `(F(m), F'(m))`.
    pub(crate) fn eval(&self, m: Complex64) -> (Complex64, Complex64) {
        let shift = self.z + self.tau * m;
        let mut f = Complex64::new(0.0, 0.0);
        let mut r2 = Complex64::new(0.0, 0.0);
        for &(v, w) in self.atoms {
            let g = 1.0 / (self.s * v - shift);
            f += w * g;
            r2 += w * g * g;
        }
        (f, self.tau * r2)
    }

    /// Weighted moments `R_1, R_2, R_3` and `(1/N) sum |g_i|` at `m`.
    pub(crate) fn moments(&self, m: Complex64) -> ([Complex64; 3], f64) {
        let shift = self.z + self.tau * m;
        let mut r = [Complex64::new(0.0, 0.0); 3];
        let mut abs = 0.0;
        for &(v, w) in self.atoms {
            let g = 1.0 / (self.s * v - shift);
            r[0] += w * g;
            r[1] += w * g * g;
            r[2] += w * g * g * g;
            abs += w * g.norm();
        }
        (r, abs)
    }
}

/// Solves the self-consistent equation at one point.
///
/// Damped fixed-point iteration with a residual-driven damping factor,
/// switching to Newton steps once the residual is small or the iteration
/// stalls. At zero time the solution is the Stieltjes transform of `V`.
pub fn solve_mfc(
    profile: &PotentialProfile,
    time: Time,
    point: SpectralPoint,
    opts: &SolverOptions,
    guess: Option<Complex64>,
) -> Result<Complex64, FreeConvError> {
    time.validate()?;
    let z = point.z();
    if time.is_zero() {
        return Ok(profile.stieltjes(z));
    }
    let map = FixedPointMap::new(profile, time, z);
    let mut m = match guess {
        Some(g) if g.im > 0.0 && g.is_finite() => g,
        _ => -1.0 / z,
    };
    let (mut f, mut df) = map.eval(m);
    let mut res = (m - f).norm();
    let mut theta: f64 = 1.0;
    let mut slow = 0usize;

    for _ in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(m);
        }
        if res < opts.newton_switch || slow >= 5 {
            if let Some((m_new, f_new, df_new, res_new)) = newton_step(&map, m, f, df, res) {
                slow = if res_new > 0.5 * res { slow } else { 0 };
                m = m_new;
                f = f_new;
                df = df_new;
                res = res_new;
                continue;
            }
        }
        let mut accepted = false;
        while !accepted {
            let m_new = (1.0 - theta) * m + theta * f;
            let (f_new, df_new) = map.eval(m_new);
            let res_new = (m_new - f_new).norm();
            if m_new.im > 0.0 && (res_new < res || theta <= opts.theta_min) {
                slow = if res_new > 0.9 * res { slow + 1 } else { 0 };
                if res_new < res {
                    theta = (theta * 1.5).min(1.0);
                }
                m = m_new;
                f = f_new;
                df = df_new;
                res = res_new;
                accepted = true;
            } else {
                theta = (theta * 0.5).max(opts.theta_min);
            }
        }
    }
    if res <= opts.tol {
        return Ok(m);
    }
    Err(FreeConvError::NonConvergence {
        energy: point.energy,
        eta: point.eta,
        residual: res,
        iterations: opts.max_iter,
    })
}

fn newton_step(
    map: &FixedPointMap<'_>,
    m: Complex64,
    f: Complex64,
    df: Complex64,
    res: f64,
) -> Option<(Complex64, Complex64, Complex64, f64)> {
    let g = m - f;
    let dg = 1.0 - df;
    if dg.norm() == 0.0 {
        return None;
    }
    let step = g / dg;
    let mut lambda = 1.0;
    for _ in 0..30 {
        let m_new = m - lambda * step;
        if m_new.im > 0.0 && m_new.is_finite() {
            let (f_new, df_new) = map.eval(m_new);
            let res_new = (m_new - f_new).norm();
            if res_new < res {
                return Some((m_new, f_new, df_new, res_new));
            }
        }
        lambda *= 0.5;
    }
    None
}

/// Solves at `point` by descending from `eta = max(1, eta_target)` with
/// factor `0.7`, warm-starting each rung from the previous one.
pub fn solve_mfc_continued(
    profile: &PotentialProfile,
    time: Time,
    point: SpectralPoint,
    opts: &SolverOptions,
) -> Result<Complex64, FreeConvError> {
    let mut guess = None;
    let mut eta = 1.0_f64.max(point.eta);
    while eta > point.eta {
        let rung = SpectralPoint::new(point.energy, eta)?;
        guess = Some(solve_mfc(profile, time, rung, opts, guess)?);
        eta *= 0.7;
    }
    solve_mfc(profile, time, point, opts, guess)
}
