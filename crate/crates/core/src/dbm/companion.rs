use serde::Serialize;

use super::integrator::{drift_split, Companion, CoupledTrajectory, StepData};
use super::DbmError;

/// Advances `x_i` for `i` in `lo..hi` with the (possibly truncated,
/// possibly regularized) drift evaluated on the driving path `process`.
struct DriftCompanion {
    process: usize,
    eps: f64,
    lo: usize,
    hi: usize,
    values: Vec<f64>,
    scratch: Vec<f64>,
    snapshots: Vec<Vec<f64>>,
    max_dev: f64,
}

impl DriftCompanion {
    fn new(process: usize, eps: f64, lo: usize, hi: usize, initial: &[f64]) -> Self {
        DriftCompanion {
            process,
            eps,
            lo,
            hi,
            values: initial[lo..hi].to_vec(),
            scratch: vec![0.0; hi - lo],
            snapshots: Vec::new(),
            max_dev: 0.0,
        }
    }
}

impl Companion for DriftCompanion {
    fn advance(&mut self, step: &StepData<'_>) {
        let (h, decay) = (step.h, step.decay);
        let p = self.process;
        drift_split(&step.pre[p], &step.near[p], self.eps, self.lo, self.hi, &mut self.scratch);
        let inc = &step.incr[p];
        let after = &step.post[p];
        for (k, v) in self.values.iter_mut().enumerate() {
            let i = self.lo + k;
            *v = decay * *v + h * self.scratch[k] + inc[i];
            self.max_dev = self.max_dev.max((*v - after[i]).abs());
        }
    }

    fn record(&mut self) {
        self.snapshots.push(self.values.clone());
    }
}

/// Paths driven by the `eps`-shifted drift `1/(x_k - x_j + eps sign(k - j))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularizedPaths {
    pub epsilon: f64,
    /// Snapshots of the regularized `x` process (macroscopic units).
    pub x_hat: Vec<Vec<f64>>,
    pub y_hat: Vec<Vec<f64>>,
    /// `sup_t max_k |x_hat_k - x_k|`, over every accepted step.
    pub sup_deviation_x: f64,
    pub sup_deviation_y: f64,
}

impl RegularizedPaths {
    pub fn sup_deviation(&self) -> f64 {
        self.sup_deviation_x.max(self.sup_deviation_y)
    }
}

fn check_eps(eps: f64) -> Result<(), DbmError> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(DbmError::InvalidOptions(format!("epsilon must be non-negative, got {eps}")));
    }
    Ok(())
}

/// Regularized companions of both coupled processes, with the same noise.
pub fn integrate_regularized(traj: &CoupledTrajectory, eps: f64) -> Result<RegularizedPaths, DbmError> {
    check_eps(eps)?;
    let n = traj.n;
    let mut cx = DriftCompanion::new(0, eps, 0, n, &traj.x[0]);
    let mut cy = DriftCompanion::new(1, eps, 0, n, &traj.y[0]);
    traj.replay(&mut [&mut cx, &mut cy])?;
    Ok(RegularizedPaths {
        epsilon: eps,
        x_hat: cx.snapshots,
        y_hat: cy.snapshots,
        sup_deviation_x: cx.max_dev,
        sup_deviation_y: cy.max_dev,
    })
}

/// Regularized paths and their short-range truncations on labels `|j| <= K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortRangePaths {
    pub cutoff: usize,
    pub epsilon: f64,
    /// Labels covered, `j_lo..=j_hi` relative to `k0` (for x) and `j0` (for y).
    pub j_lo: i64,
    pub j_hi: i64,
    /// Microscopic snapshot times `N (t - t_start)`.
    pub micro_times: Vec<f64>,
    /// Microscopic windows indexed `[snapshot][j - j_lo]`.
    pub x_hat: Vec<Vec<f64>>,
    pub y_hat: Vec<Vec<f64>>,
    pub x_tilde: Vec<Vec<f64>>,
    pub y_tilde: Vec<Vec<f64>>,
}

impl ShortRangePaths {
    fn col(&self, j: i64) -> usize {
        (j - self.j_lo) as usize
    }

    /// `sup_t |(x_hat_a - x_hat_b) - (x_tilde_a - x_tilde_b)|` in microscopic units.
    pub fn gap_error(&self, a: i64, b: i64) -> f64 {
        let (ca, cb) = (self.col(a), self.col(b));
        self.x_hat
            .iter()
            .zip(&self.x_tilde)
            .map(|(h, t)| ((h[ca] - h[cb]) - (t[ca] - t[cb])).abs())
            .fold(0.0, f64::max)
    }

    /// `sup_t max_{|a| <= |b| <= K} |(x_hat_a - x_hat_b) - (x_tilde_a - x_tilde_b)|
    /// (K - |a| + 1)^{1/2} (K - |b| + 1)^{1/2} / |a - b|`.
    pub fn cutoff_observable(&self) -> f64 {
        let k = self.cutoff as f64;
        let mut best = 0.0_f64;
        for (h, t) in self.x_hat.iter().zip(&self.x_tilde) {
            for a in self.j_lo..=self.j_hi {
                for b in self.j_lo..=self.j_hi {
                    if a == b || a.abs() > b.abs() {
                        continue;
                    }
                    let (ca, cb) = (self.col(a), self.col(b));
                    let d = ((h[ca] - h[cb]) - (t[ca] - t[cb])).abs();
                    let w = ((k - a.abs() as f64 + 1.0) * (k - b.abs() as f64 + 1.0)).sqrt() / (a - b).abs() as f64;
                    best = best.max(d * w);
                }
            }
        }
        best
    }
}

/// Short-range companions: the drift of `x_tilde_j` sums only over `|l| <= K`.
/// A window reaching past the spectrum is clamped to it, so `K >= N`
/// reproduces the regularized paths.
pub fn integrate_shortrange(traj: &CoupledTrajectory, cutoff: usize, eps: f64) -> Result<ShortRangePaths, DbmError> {
    check_eps(eps)?;
    if cutoff == 0 {
        return Err(DbmError::InvalidOptions("cutoff K must be at least 1".into()));
    }
    let n = traj.n as i64;
    let (k0, j0) = (traj.k0 as i64, traj.j0 as i64);
    let k = cutoff as i64;
    let j_lo = (-k).max(-k0).max(-j0);
    let j_hi = k.min(n - 1 - k0).min(n - 1 - j0);
    let xr = ((k0 + j_lo) as usize, (k0 + j_hi + 1) as usize);
    let yr = ((j0 + j_lo) as usize, (j0 + j_hi + 1) as usize);
    let mut hx = DriftCompanion::new(0, eps, 0, traj.n, &traj.x[0]);
    let mut hy = DriftCompanion::new(1, eps, 0, traj.n, &traj.y[0]);
    let mut tx = DriftCompanion::new(0, eps, xr.0, xr.1, &traj.x[0]);
    let mut ty = DriftCompanion::new(1, eps, yr.0, yr.1, &traj.y[0]);
    traj.replay(&mut [&mut hx, &mut hy, &mut tx, &mut ty])?;
    let nf = traj.n as f64;
    let micro = |snaps: Vec<Vec<f64>>, lo: usize, hi: usize| -> Vec<Vec<f64>> {
        snaps.into_iter().map(|s| s[lo..hi].iter().map(|v| nf * v).collect()).collect()
    };
    let whole = |snaps: Vec<Vec<f64>>| -> Vec<Vec<f64>> { snaps.into_iter().map(|s| s.iter().map(|v| nf * v).collect()).collect() };
    Ok(ShortRangePaths {
        cutoff,
        epsilon: eps,
        j_lo,
        j_hi,
        micro_times: (0..traj.len()).map(|m| traj.micro_time(m)).collect(),
        x_hat: micro(hx.snapshots, xr.0, xr.1),
        y_hat: micro(hy.snapshots, yr.0, yr.1),
        x_tilde: whole(tx.snapshots),
        y_tilde: whole(ty.snapshots),
    })
}

/// `sup_{|j|,|j'| <= range} N |(x_j - x_j') - (y_j - y_j')|` at snapshot `m`.
pub fn gap_difference(traj: &CoupledTrajectory, m: usize, range: i64) -> f64 {
    let (lo, hi) = traj.label_range();
    let (a, b) = ((-range).max(lo), range.min(hi));
    let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in a..=b {
        let d = traj.micro_x(m, j) - traj.micro_y(m, j);
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    dmax - dmin
}

/// Fraction of triples `(i, j, t)` with `i, j` within `window` labels of
/// `k0`, `N^0.1 <= |i - j| <= N^0.4`, and
/// `lo <= |x_i - x_j| / |i - j| <= hi` in microscopic units.
pub fn path_rigidity_fraction(traj: &CoupledTrajectory, window: usize, lo: f64, hi: f64) -> f64 {
    let n = traj.n as f64;
    let dmin = n.powf(0.1).ceil() as usize;
    let dmax = n.powf(0.4).floor() as usize;
    let a = traj.k0.saturating_sub(window);
    let b = (traj.k0 + window).min(traj.n - 1);
    let (mut good, mut total) = (0usize, 0usize);
    for x in &traj.x {
        for i in a..=b {
            for d in dmin..=dmax {
                let j = i + d;
                if j > b {
                    break;
                }
                let r = n * (x[j] - x[i]) / d as f64;
                total += 1;
                if r >= lo && r <= hi {
                    good += 1;
                }
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        good as f64 / total as f64
    }
}
