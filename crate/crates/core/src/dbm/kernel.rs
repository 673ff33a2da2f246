use serde::Serialize;

use super::companion::ShortRangePaths;
use super::integrator::CoupledTrajectory;
use super::DbmError;

/// Coefficients `B_jl = 1/((x_j - x_l + e_jl)(y_j - y_l + e_jl))` on the
/// labels `|j| <= K`, piecewise constant between stored microscopic times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParabolicKernel {
    pub cutoff: usize,
    /// Microscopic regularization, `e_jl = epsilon sign(j - l)`.
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Snapshot indices of the source trajectory, when harvested from one.
    pub source_snapshots: Vec<usize>,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
}

impl ParabolicKernel {
    /// Builds a kernel from explicit windows of length `2K + 1`.
    pub fn from_windows(
        times: Vec<f64>,
        xs: Vec<Vec<f64>>,
        ys: Vec<Vec<f64>>,
        epsilon: f64,
    ) -> Result<Self, DbmError> {
        if times.is_empty() || xs.len() != times.len() || ys.len() != times.len() {
            return Err(DbmError::InvalidOptions("kernel needs one x and y window per time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DbmError::InvalidOptions("kernel times must increase".into()));
        }
        let width = xs[0].len();
        if width % 2 == 0 || xs.iter().chain(&ys).any(|w| w.len() != width) {
            return Err(DbmError::InvalidOptions("kernel windows must all have odd length 2K+1".into()));
        }
        Ok(ParabolicKernel {
            cutoff: width / 2,
            epsilon,
            source_snapshots: (0..times.len()).collect(),
            times,
            xs,
            ys,
        })
    }

    /// Harvests microscopic windows `x_j = N lambda_{k0+j}`, `y_j = N mu_{j0+j}`
    /// for `|j| <= K` from every `stride`-th snapshot. `eps_macro` is
    /// rescaled by `N`.
    pub fn from_trajectory(
        traj: &CoupledTrajectory,
        cutoff: usize,
        eps_macro: f64,
        stride: usize,
    ) -> Result<Self, DbmError> {
        let (lo, hi) = traj.label_range();
        let k = cutoff as i64;
        if -k < lo || k > hi {
            return Err(DbmError::InvalidOptions(format!(
                "cutoff {cutoff} exceeds the labels available around k0 = {}, j0 = {}",
                traj.k0, traj.j0
            )));
        }
        let stride = stride.max(1);
        let mut snaps: Vec<usize> = (0..traj.len()).step_by(stride).collect();
        if *snaps.last().expect("non-empty") != traj.len() - 1 {
            snaps.push(traj.len() - 1);
        }
        let times = snaps.iter().map(|&m| traj.micro_time(m)).collect();
        let xs = snaps
            .iter()
            .map(|&m| (-k..=k).map(|j| traj.micro_x(m, j)).collect())
            .collect();
        let ys = snaps
            .iter()
            .map(|&m| (-k..=k).map(|j| traj.micro_y(m, j)).collect())
            .collect();
        let mut kernel = Self::from_windows(times, xs, ys, eps_macro * traj.n as f64)?;
        kernel.source_snapshots = snaps;
        Ok(kernel)
    }

    pub fn width(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// `B_jl` at stored time index `m`, positions `p, q` in `0..2K+1`.
    pub fn coefficient(&self, m: usize, p: usize, q: usize) -> f64 {
        let e = match p.cmp(&q) {
            std::cmp::Ordering::Greater => self.epsilon,
            std::cmp::Ordering::Less => -self.epsilon,
            std::cmp::Ordering::Equal => return 0.0,
        };
        let (x, y) = (&self.xs[m], &self.ys[m]);
        1.0 / ((x[p] - x[q] + e) * (y[p] - y[q] + e))
    }

    /// Graph Laplacian at time index `m` (row-major) and its largest diagonal.
    fn laplacian(&self, m: usize) -> Result<(Vec<f64>, f64), DbmError> {
        let w = self.width();
        let mut l = vec![0.0; w * w];
        for p in 0..w {
            for q in (p + 1)..w {
                let b = self.coefficient(m, p, q);
                if !b.is_finite() {
                    return Err(DbmError::KernelSingular {
                        time: self.times[m],
                        j: p as i64 - self.cutoff as i64,
                        l: q as i64 - self.cutoff as i64,
                    });
                }
                l[p * w + q] = -b;
                l[q * w + p] = -b;
                l[p * w + p] += b;
                l[q * w + q] += b;
            }
        }
        let maxd = (0..w).map(|p| l[p * w + p]).fold(0.0, f64::max);
        Ok((l, maxd))
    }

    fn segment_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }
}

/// Crank-Nicolson stepping of `dv = -L(t) v`, with `L` frozen on each
/// stored interval and steps `ds <= 0.5 / max_j L_jj`. `observe` sees the
/// state after every step.
fn evolve_with(
    kernel: &ParabolicKernel,
    state: &mut [f64],
    columns: usize,
    s: f64,
    t: f64,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<(), DbmError> {
    let last = *kernel.times.last().expect("non-empty kernel");
    if s < kernel.times[0] || t > last + 1e-9 * last.abs().max(1.0) || t < s {
        return Err(DbmError::KernelRange {
            from: s,
            to: t,
            available: (kernel.times[0], last),
        });
    }
    let w = kernel.width();
    let mut now = s;
    let mut buf = vec![0.0; w * columns];
    while now < t {
        let m = kernel.segment_index(now);
        let seg_end = if m + 1 < kernel.times.len() { kernel.times[m + 1].min(t) } else { t };
        let span = seg_end - now;
        if span <= 0.0 {
            break;
        }
        let (l, maxd) = kernel.laplacian(m)?;
        let steps = ((span * maxd / 0.5).ceil() as usize).max(1);
        let ds = span / steps as f64;
        // A = I + ds/2 L (factored), M = I - ds/2 L
        let mut a = l.iter().map(|v| 0.5 * ds * v).collect::<Vec<_>>();
        for p in 0..w {
            a[p * w + p] += 1.0;
        }
        cholesky(&mut a, w);
        for step in 0..steps {
            for c in 0..columns {
                for p in 0..w {
                    let row = &l[p * w..(p + 1) * w];
                    let mut lv = 0.0;
                    for q in 0..w {
                        lv += row[q] * state[q * columns + c];
                    }
                    buf[p * columns + c] = state[p * columns + c] - 0.5 * ds * lv;
                }
            }
            cholesky_solve(&a, w, &mut buf, columns);
            state.copy_from_slice(&buf);
            let at = if step + 1 == steps { seg_end } else { now + (step + 1) as f64 * ds };
            observe(at, state);
        }
        now = seg_end;
    }
    Ok(())
}

fn cholesky(a: &mut [f64], n: usize) {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
}

/// Solves `L L^T X = B` in place for `cols` right-hand sides stored row-major.
fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64], cols: usize) {
    for c in 0..cols {
        for i in 0..n {
            let mut s = b[i * cols + c];
            for k in 0..i {
                s -= l[i * n + k] * b[k * cols + c];
            }
            b[i * cols + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i * cols + c];
            for k in (i + 1)..n {
                s -= l[k * n + i] * b[k * cols + c];
            }
            b[i * cols + c] = s / l[i * n + i];
        }
    }
}

/// `v(t) = U(s, t) v0` for the contraction form `dv_j = -sum_l B_jl (v_j - v_l) dt`.
pub fn evolve_parabolic(kernel: &ParabolicKernel, v0: &[f64], s: f64, t: f64) -> Result<Vec<f64>, DbmError> {
    if v0.len() != kernel.width() {
        return Err(DbmError::LengthMismatch {
            left: v0.len(),
            right: kernel.width(),
        });
    }
    let mut v = v0.to_vec();
    evolve_with(kernel, &mut v, 1, s, t, |_, _| {})?;
    Ok(v)
}

/// Propagator entries `U_ap(s, t)` for `|a|, |p| <= K`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagatorMatrix {
    pub cutoff: usize,
    pub s: f64,
    pub t: f64,
    pub entries: Vec<f64>,
}

impl PropagatorMatrix {
    pub fn width(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn get(&self, a: usize, p: usize) -> f64 {
        self.entries[a * self.width() + p]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        let w = self.width();
        (0..w)
            .map(|a| (self.entries[a * w..(a + 1) * w].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `sum_p |U_ap|`, the induced sup-norm.
    pub fn sup_norm(&self) -> f64 {
        let w = self.width();
        (0..w)
            .map(|a| self.entries[a * w..(a + 1) * w].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let w = self.width();
        (0..w)
            .map(|a| (0..w).map(|p| self.entries[a * w + p] * v[p]).sum())
            .collect()
    }

    /// `E(d) = max_{|a - p| = d} |U_ap|` for `d = 0..2K`, over rows with
    /// `|a| <= row_radius`.
    pub fn decay_envelope(&self, row_radius: usize) -> Vec<f64> {
        let w = self.width();
        let k = self.cutoff;
        let mut env = vec![0.0_f64; w];
        for a in k.saturating_sub(row_radius)..=(k + row_radius).min(w - 1) {
            for p in 0..w {
                let d = a.abs_diff(p);
                env[d] = env[d].max(self.entries[a * w + p].abs());
            }
        }
        env
    }

    /// Least-squares slope of `log E(d)` against `log(d + 1)` over `d = 1..=d_max`
    /// with positive envelope.
    pub fn decay_exponent(&self, row_radius: usize, d_max: usize) -> f64 {
        let env = self.decay_envelope(row_radius);
        let pts: Vec<(f64, f64)> = (1..=d_max.min(env.len() - 1))
            .filter(|&d| env[d] > 0.0)
            .map(|d| (((d + 1) as f64).ln(), env[d].ln()))
            .collect();
        crate::stats::least_squares_slope(&pts).unwrap_or(f64::NAN)
    }
}

pub fn propagator(kernel: &ParabolicKernel, s: f64, t: f64) -> Result<PropagatorMatrix, DbmError> {
    let w = kernel.width();
    let mut u = vec![0.0; w * w];
    for p in 0..w {
        u[p * w + p] = 1.0;
    }
    evolve_with(kernel, &mut u, w, s, t, |_, _| {})?;
    Ok(PropagatorMatrix {
        cutoff: kernel.cutoff,
        s,
        t,
        entries: u,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderPoint {
    pub sigma: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub points: Vec<HolderPoint>,
    /// Minus the log-log slope of ratio against sigma.
    pub exponent: f64,
    pub passes: bool,
}

/// For each `sigma`: `sup` over times in `[sigma - sigma^{1/3}, sigma]` of
/// `sup_{|j| + |j'| <= sigma^{2/3}} |v_j - v_j'| / ||v0||_inf`, starting
/// from `v0` at the first kernel time.
pub fn holder_check(
    kernel: &ParabolicKernel,
    v0: &[f64],
    sigmas: &[f64],
    min_exponent: f64,
) -> Result<HolderReport, DbmError> {
    if v0.len() != kernel.width() {
        return Err(DbmError::LengthMismatch {
            left: v0.len(),
            right: kernel.width(),
        });
    }
    let start = kernel.times[0];
    let k = kernel.cutoff as i64;
    let norm = v0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut ratios = vec![0.0_f64; sigmas.len()];
    let osc = |v: &[f64], r: f64| -> f64 {
        let r = r.floor() as i64;
        let mut best = 0.0_f64;
        for j in -r.min(k)..=r.min(k) {
            let rest = r - j.abs();
            for jp in -rest.min(k)..=rest.min(k) {
                best = best.max((v[(j + k) as usize] - v[(jp + k) as usize]).abs());
            }
        }
        best
    };
    let horizon = sigmas.iter().copied().fold(0.0_f64, f64::max);
    if norm > 0.0 {
        let mut v = v0.to_vec();
        evolve_with(kernel, &mut v, 1, start, start + horizon, |at, v| {
            let tau = at - start;
            for (i, &sigma) in sigmas.iter().enumerate() {
                if tau >= sigma - sigma.cbrt() - 1e-12 && tau <= sigma + 1e-12 {
                    ratios[i] = ratios[i].max(osc(v, sigma.powf(2.0 / 3.0)) / norm);
                }
            }
        })?;
    }
    let points: Vec<HolderPoint> = sigmas
        .iter()
        .zip(&ratios)
        .map(|(&sigma, &ratio)| HolderPoint { sigma, ratio })
        .collect();
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.ratio > 0.0)
        .map(|p| (p.sigma.ln(), p.ratio.ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        -crate::stats::least_squares_slope(&pts).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok(HolderReport {
        passes: exponent > min_exponent,
        points,
        exponent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DuhamelReport {
    /// `sup_t sup_{|a| <= sqrt(K)} |u_a - v_a|`.
    pub residual: f64,
    /// `sup_t max_j |xi_j|` and its time-average of `max_j |xi_j|`.
    pub xi_max: f64,
    pub xi_mean: f64,
    pub final_time: f64,
}

/// Compares `u_a = e^{t/(2N)} (x_tilde_a - y_tilde_a)` with the solution `v`
/// of the parabolic system started from `u(0)`; the difference is driven
/// by the forcing
/// `xi_j = e^{t/(2N)} sum_l B_jl [((x_j - x_l) - (y_j - y_l)) - ((x_tilde_j - x_tilde_l) - (y_tilde_j - y_tilde_l))]`.
pub fn duhamel_residual(
    traj: &CoupledTrajectory,
    paths: &ShortRangePaths,
    kernel: &ParabolicKernel,
) -> Result<DuhamelReport, DbmError> {
    let k = kernel.cutoff as i64;
    if paths.j_lo > -k || paths.j_hi < k {
        return Err(DbmError::InvalidOptions("short-range paths do not cover the kernel window".into()));
    }
    let n = traj.n as f64;
    let col = |j: i64| (j - paths.j_lo) as usize;
    let u_at = |m: usize| -> Vec<f64> {
        let tau = paths.micro_times[m];
        let f = (tau / (2.0 * n)).exp();
        (-k..=k).map(|j| f * (paths.x_tilde[m][col(j)] - paths.y_tilde[m][col(j)])).collect()
    };
    let snaps = &kernel.source_snapshots;
    let radius = (kernel.cutoff as f64).sqrt().floor() as i64;
    let mut v = u_at(snaps[0]);
    let mut residual = 0.0_f64;
    let (mut xi_max, mut xi_sum) = (0.0_f64, 0.0);
    for (idx, &m) in snaps.iter().enumerate() {
        if idx > 0 {
            v = evolve_parabolic(kernel, &v, kernel.times[idx - 1], kernel.times[idx])?;
        }
        let u = u_at(m);
        for a in -radius..=radius {
            let p = (a + k) as usize;
            residual = residual.max((u[p] - v[p]).abs());
        }
        let tau = paths.micro_times[m];
        let f = (tau / (2.0 * n)).exp();
        let w = kernel.width();
        let mut step_max = 0.0_f64;
        for p in 0..w {
            let j = p as i64 - k;
            let mut xi = 0.0;
            for q in 0..w {
                if q == p {
                    continue;
                }
                let l = q as i64 - k;
                let b = kernel.coefficient(idx, p, q);
                let full = (traj.micro_x(m, j) - traj.micro_x(m, l)) - (traj.micro_y(m, j) - traj.micro_y(m, l));
                let cut = (paths.x_tilde[m][col(j)] - paths.x_tilde[m][col(l)])
                    - (paths.y_tilde[m][col(j)] - paths.y_tilde[m][col(l)]);
                xi += b * (full - cut);
            }
            step_max = step_max.max((f * xi).abs());
        }
        xi_max = xi_max.max(step_max);
        xi_sum += step_max;
    }
    Ok(DuhamelReport {
        residual,
        xi_max,
        xi_mean: xi_sum / snaps.len() as f64,
        final_time: *kernel.times.last().expect("non-empty"),
    })
}
