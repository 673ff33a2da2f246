use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::DbmError;
use crate::rng::RngStream;

/// Step control for the eigenvalue SDE
/// `d lambda_i = sqrt(2/N) dB_i + ((1/N) sum_{k != i} 1/(lambda_i - lambda_k) - lambda_i/2) dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DbmOptions {
    /// Time at which the initial data sits.
    pub t_start: f64,
    /// Length of the integration interval.
    pub duration: f64,
    /// Nominal step.
    pub dt: f64,
    /// Record a snapshot every `record_every` nominal steps.
    pub record_every: usize,
    /// Maximal number of halvings of a nominal step.
    pub max_depth: u32,
    /// Set to `false` to drop the Brownian term (test hook).
    pub noise: bool,
    /// From this depth on, a rejected step is retried with nearest-neighbour
    /// repulsion taken implicitly before it is halved.
    pub implicit_depth: u32,
    /// Set to `false` to disable the implicit retry.
    pub implicit_fallback: bool,
}

impl DbmOptions {
    pub fn new(duration: f64, dt: f64) -> Self {
        DbmOptions {
            t_start: 0.0,
            duration,
            dt,
            record_every: 1,
            max_depth: 20,
            noise: true,
            implicit_depth: 4,
            implicit_fallback: true,
        }
    }

    pub fn starting_at(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn recording_every(mut self, steps: usize) -> Self {
        self.record_every = steps.max(1);
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.noise = false;
        self
    }

    pub fn without_implicit_fallback(mut self) -> Self {
        self.implicit_fallback = false;
        self
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    fn validate(&self) -> Result<(), DbmError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DbmError::InvalidOptions(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() || !self.t_start.is_finite() {
            return Err(DbmError::InvalidOptions(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        let k = (self.duration / self.dt).round();
        let k = if (k * self.dt - self.duration).abs() <= 1e-9 * self.dt.max(self.duration) {
            k
        } else {
            (self.duration / self.dt).ceil()
        };
        k as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub max_depth: u32,
    /// Accepted steps taken with the implicit nearest-neighbour fallback.
    pub implicit_steps: u64,
}

/// `out[i - lo] = (1/N) sum_{k in lo..hi, k != i} 1/(x_i - x_k + eps sign(i - k))`
/// for `i in lo..hi`, with `N = x.len()`. Nearest-neighbour pairs are
/// evaluated on `near` and all other pairs on `far`.
pub(crate) fn drift_split(far: &[f64], near: &[f64], eps: f64, lo: usize, hi: usize, out: &mut [f64]) {
    let inv_n = 1.0 / far.len() as f64;
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for i in lo..hi {
        let mut acc = 0.0;
        for k in (i + 1)..hi {
            let inv = if k == i + 1 {
                1.0 / (near[i] - near[k] - eps)
            } else {
                1.0 / (far[i] - far[k] - eps)
            };
            acc += inv;
            out[k - lo] -= inv;
        }
        out[i - lo] += acc;
    }
    for o in out.iter_mut() {
        *o *= inv_n;
    }
}

/// Minimizes `|y - b|^2 / 2 - c sum_i ln(y_{i+1} - y_i)` over increasing `y`
/// by damped Newton from the increasing point `start`. The minimizer solves
/// `y_i = b_i + c sum_{k = i +- 1} 1/(y_i - y_k)`.
fn solve_nearest_implicit(start: &[f64], b: &[f64], c: f64) -> Option<Vec<f64>> {
    let n = b.len();
    let objective = |y: &[f64]| -> f64 {
        let mut v = 0.0;
        for i in 0..n {
            v += 0.5 * (y[i] - b[i]).powi(2);
        }
        for w in y.windows(2) {
            v -= c * (w[1] - w[0]).ln();
        }
        v
    };
    let increasing = |y: &[f64]| y.iter().all(|v| v.is_finite()) && y.windows(2).all(|w| w[1] > w[0]);
    let mut y = start.to_vec();
    let mut grad = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let scale = 1.0 + b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for _ in 0..200 {
        for i in 0..n {
            grad[i] = y[i] - b[i];
            diag[i] = 1.0;
        }
        for i in 0..n.saturating_sub(1) {
            let g = y[i + 1] - y[i];
            grad[i] += c / g;
            grad[i + 1] -= c / g;
            let w = c / (g * g);
            diag[i] += w;
            diag[i + 1] += w;
            off[i] = -w;
        }
        if grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())) <= 1e-13 * scale {
            return Some(y);
        }
        let step = thomas(&diag, &off, &grad);
        if step.iter().fold(0.0_f64, |m, v| m.max(v.abs())) <= 1e-13 * scale {
            let y: Vec<f64> = y.iter().zip(&step).map(|(v, d)| v - d).collect();
            return increasing(&y).then_some(y);
        }
        let slope: f64 = -grad.iter().zip(&step).map(|(g, d)| g * d).sum::<f64>();
        let f0 = objective(&y);
        let mut s = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = y.iter().zip(&step).map(|(v, d)| v - s * d).collect();
            if increasing(&trial) && objective(&trial) <= f0 + 1e-4 * s * slope {
                moved = trial.iter().zip(&y).any(|(a, b)| a != b);
                y = trial;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            return increasing(&y).then_some(y);
        }
    }
    increasing(&y).then_some(y)
}

/// Solves the symmetric tridiagonal system with diagonal `diag` and
/// off-diagonal `off`.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = diag[0];
    d[0] = rhs[0] / m;
    for i in 1..n {
        c[i - 1] = off[i - 1] / m;
        m = diag[i] - off[i - 1] * c[i - 1];
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / m;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// A process advanced alongside the driving processes on exactly the same
/// accepted steps and Brownian increments.
pub(crate) trait Companion {
    /// `pre`/`post` are the driving states before and after the step,
    /// `near` the states on which nearest-neighbour drift was evaluated and
    /// `incr[p][i]` the scaled noise increment of particle `i` of process `p`.
    fn advance(&mut self, step: &StepData<'_>);
    fn record(&mut self);
}

pub(crate) struct StepData<'a> {
    pub pre: &'a [Vec<f64>],
    pub near: &'a [Vec<f64>],
    pub post: &'a [Vec<f64>],
    pub h: f64,
    pub decay: f64,
    pub incr: &'a [Vec<f64>],
}

pub(crate) struct EngineOutput {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Vec<f64>>>,
    pub stats: IntegrationStats,
}

struct Engine {
    n: usize,
    state: Vec<Vec<f64>>,
    offsets: Vec<i64>,
    label_lo: i64,
    label_count: usize,
    noise_scale: f64,
    rng: ChaCha8Rng,
    opts: DbmOptions,
    time: f64,
    stats: IntegrationStats,
    drift: Vec<f64>,
}

impl Engine {
    fn increments(&self, db: &[f64]) -> Vec<Vec<f64>> {
        self.offsets
            .iter()
            .map(|&off| {
                (0..self.n)
                    .map(|i| self.noise_scale * db[(i as i64 + off - self.label_lo) as usize])
                    .collect()
            })
            .collect()
    }

    fn propose(&mut self, h: f64, decay: f64, incr: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let n = self.n;
        let mut next = Vec::with_capacity(self.state.len());
        for (p, x) in self.state.iter().enumerate() {
            drift_split(x, x, 0.0, 0, n, &mut self.drift);
            let y: Vec<f64> = (0..n)
                .map(|i| decay * x[i] + h * self.drift[i] + incr[p][i])
                .collect();
            if !acceptable(x, &y) {
                return None;
            }
            next.push(y);
        }
        Some(next)
    }

    /// Step with nearest-neighbour repulsion evaluated at the end point.
    /// Returns the end-point states and the next state.
    fn propose_implicit(&mut self, h: f64, decay: f64, incr: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let n = self.n;
        let c = h / n as f64;
        let mut nears = Vec::with_capacity(self.state.len());
        let mut next = Vec::with_capacity(self.state.len());
        for (p, x) in self.state.iter().enumerate() {
            drift_split(x, x, 0.0, 0, n, &mut self.drift);
            let b: Vec<f64> = (0..n)
                .map(|i| {
                    let mut nn = 0.0;
                    if i > 0 {
                        nn += 1.0 / (x[i] - x[i - 1]);
                    }
                    if i + 1 < n {
                        nn += 1.0 / (x[i] - x[i + 1]);
                    }
                    decay * x[i] + h * (self.drift[i] - nn / n as f64) + incr[p][i]
                })
                .collect();
            let near = solve_nearest_implicit(x, &b, c)?;
            drift_split(x, &near, 0.0, 0, n, &mut self.drift);
            let y: Vec<f64> = (0..n)
                .map(|i| decay * x[i] + h * self.drift[i] + incr[p][i])
                .collect();
            if y.iter().any(|v| !v.is_finite()) || y.windows(2).any(|w| w[1] <= w[0]) {
                return None;
            }
            nears.push(near);
            next.push(y);
        }
        Some((nears, next))
    }

    fn commit(
        &mut self,
        near: Option<Vec<Vec<f64>>>,
        next: Vec<Vec<f64>>,
        h: f64,
        decay: f64,
        incr: &[Vec<f64>],
        depth: u32,
        companions: &mut [&mut dyn Companion],
    ) {
        let step = StepData {
            pre: &self.state,
            near: near.as_deref().unwrap_or(&self.state),
            post: &next,
            h,
            decay,
            incr,
        };
        for c in companions.iter_mut() {
            c.advance(&step);
        }
        self.state = next;
        self.time += h;
        self.stats.accepted_steps += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);
    }

    fn advance(
        &mut self,
        h: f64,
        db: &[f64],
        depth: u32,
        companions: &mut [&mut dyn Companion],
    ) -> Result<(), DbmError> {
        let decay = (-0.5 * h).exp();
        let incr = self.increments(db);
        if let Some(next) = self.propose(h, decay, &incr) {
            self.commit(None, next, h, decay, &incr, depth, companions);
            return Ok(());
        }
        self.stats.rejected_steps += 1;
        if self.opts.implicit_fallback && depth >= self.opts.implicit_depth.min(self.opts.max_depth) {
            if let Some((near, next)) = self.propose_implicit(h, decay, &incr) {
                self.stats.implicit_steps += 1;
                self.commit(Some(near), next, h, decay, &incr, depth, companions);
                return Ok(());
            }
        }
        if depth >= self.opts.max_depth {
            return Err(DbmError::StepCollapse {
                time: self.time,
                depth,
                dt_min: h,
            });
        }
        let half_sd = 0.5 * h.sqrt();
        let mut first = Vec::with_capacity(db.len());
        for &d in db {
            let z: f64 = if self.opts.noise { self.rng.sample(StandardNormal) } else { 0.0 };
            first.push(0.5 * d + half_sd * z);
        }
        let second: Vec<f64> = db.iter().zip(&first).map(|(d, f)| d - f).collect();
        self.advance(0.5 * h, &first, depth + 1, companions)?;
        self.advance(0.5 * h, &second, depth + 1, companions)
    }
}

/// Every gap changed by at most half of its pre-step length, which keeps
/// the state strictly increasing and stops a single step from closing a gap.
fn acceptable(x: &[f64], y: &[f64]) -> bool {
    if y.iter().any(|v| !v.is_finite()) {
        return false;
    }
    x.windows(2)
        .zip(y.windows(2))
        .all(|(a, b)| ((b[1] - b[0]) - (a[1] - a[0])).abs() <= 0.5 * (a[1] - a[0]))
}

/// Runs the shared-noise engine. Process `p` uses noise label `i + offsets[p]`
/// for its particle `i`.
pub(crate) fn run_engine(
    initial: Vec<Vec<f64>>,
    offsets: Vec<i64>,
    opts: &DbmOptions,
    stream: RngStream,
    companions: &mut [&mut dyn Companion],
) -> Result<EngineOutput, DbmError> {
    opts.validate()?;
    let n = initial[0].len();
    let label_lo = offsets.iter().copied().min().unwrap_or(0).min(0);
    let label_hi = offsets.iter().map(|&o| o + n as i64).max().unwrap_or(n as i64);
    let label_count = (label_hi - label_lo) as usize;
    let mut engine = Engine {
        n,
        state: initial,
        offsets,
        label_lo,
        label_count,
        noise_scale: (2.0 / n as f64).sqrt(),
        rng: stream.rng(),
        opts: *opts,
        time: opts.t_start,
        stats: IntegrationStats::default(),
        drift: vec![0.0; n],
    };
    let steps = opts.steps();
    let mut times = vec![opts.t_start];
    let mut states = vec![engine.state.clone()];
    for c in companions.iter_mut() {
        c.record();
    }
    for k in 0..steps {
        let start = opts.t_start + k as f64 * opts.dt;
        let end = if k + 1 == steps {
            opts.t_start + opts.duration
        } else {
            opts.t_start + (k + 1) as f64 * opts.dt
        };
        let h = end - start;
        engine.time = start;
        let sd = h.sqrt();
        let db: Vec<f64> = (0..engine.label_count)
            .map(|_| {
                if opts.noise {
                    sd * engine.rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                }
            })
            .collect();
        engine.advance(h, &db, 0, companions)?;
        if (k + 1) % opts.record_every == 0 || k + 1 == steps {
            times.push(end);
            states.push(engine.state.clone());
            for c in companions.iter_mut() {
                c.record();
            }
        }
    }
    Ok(EngineOutput {
        times,
        states,
        stats: engine.stats,
    })
}

/// Single-process trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DbmTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
    /// Whether equal initial entries were separated by `i * 1e-12 * spread`.
    pub tie_broken: bool,
}

impl DbmTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one snapshot")
    }
}

/// Checks ordering and separates exact ties.
pub(crate) fn prepare_initial(initial: &[f64]) -> Result<(Vec<f64>, bool), DbmError> {
    if initial.is_empty() {
        return Err(DbmError::InvalidOptions("initial data is empty".into()));
    }
    for (i, w) in initial.windows(2).enumerate() {
        if !(w[1] >= w[0]) {
            return Err(DbmError::NotSorted { index: i + 1 });
        }
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(DbmError::InvalidOptions("initial data is not finite".into()));
    }
    let tied = initial.windows(2).any(|w| w[1] == w[0]);
    if !tied {
        return Ok((initial.to_vec(), false));
    }
    let spread = initial[initial.len() - 1] - initial[0];
    let spread = if spread > 0.0 { spread } else { 1.0 };
    let out = initial
        .iter()
        .enumerate()
        .map(|(i, &v)| v + i as f64 * 1e-12 * spread)
        .collect();
    Ok((out, true))
}

/// Integrates one Dyson Brownian motion from sorted initial data.
pub fn integrate_dbm(initial: &[f64], opts: &DbmOptions, stream: RngStream) -> Result<DbmTrajectory, DbmError> {
    let (init, tie_broken) = prepare_initial(initial)?;
    let out = run_engine(vec![init], vec![0], opts, stream, &mut [])?;
    Ok(DbmTrajectory {
        times: out.times,
        states: out.states.into_iter().map(|mut s| s.remove(0)).collect(),
        stats: out.stats,
        tie_broken,
    })
}

/// Two Dyson Brownian motions driven by the same Brownian motions, the
/// second with noise labels shifted by `k0 - j0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledTrajectory {
    pub n: usize,
    pub k0: usize,
    pub j0: usize,
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
    pub stream: RngStream,
    pub opts: DbmOptions,
}

impl CoupledTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `N (t - t_start)`.
    pub fn micro_time(&self, m: usize) -> f64 {
        self.n as f64 * (self.times[m] - self.opts.t_start)
    }

    /// `x_j = N lambda_{k0 + j}` at snapshot `m`.
    pub fn micro_x(&self, m: usize, j: i64) -> f64 {
        self.n as f64 * self.x[m][(self.k0 as i64 + j) as usize]
    }

    /// `y_j = N mu_{j0 + j}` at snapshot `m`.
    pub fn micro_y(&self, m: usize, j: i64) -> f64 {
        self.n as f64 * self.y[m][(self.j0 as i64 + j) as usize]
    }

    /// Labels `j` with both `k0 + j` and `j0 + j` in range.
    pub fn label_range(&self) -> (i64, i64) {
        let lo = -(self.k0.min(self.j0) as i64);
        let hi = (self.n - 1 - self.k0.max(self.j0)) as i64;
        (lo, hi)
    }

    fn initial(&self) -> (Vec<f64>, Vec<f64>) {
        (self.x[0].clone(), self.y[0].clone())
    }

    /// Re-runs the integration with companions attached; the driving paths
    /// are reproduced exactly.
    pub(crate) fn replay(&self, companions: &mut [&mut dyn Companion]) -> Result<EngineOutput, DbmError> {
        let (x0, y0) = self.initial();
        let offset = self.k0 as i64 - self.j0 as i64;
        run_engine(vec![x0, y0], vec![0, offset], &self.opts, self.stream, companions)
    }
}

/// Integrates the coupled pair from `x0`, `y0`.
pub fn integrate_coupled(
    x0: &[f64],
    y0: &[f64],
    k0: usize,
    j0: usize,
    opts: &DbmOptions,
    stream: RngStream,
) -> Result<CoupledTrajectory, DbmError> {
    if x0.len() != y0.len() {
        return Err(DbmError::LengthMismatch {
            left: x0.len(),
            right: y0.len(),
        });
    }
    let n = x0.len();
    if k0 >= n || j0 >= n {
        return Err(DbmError::IndexOutOfRange {
            index: k0.max(j0),
            n,
        });
    }
    let (x, _) = prepare_initial(x0)?;
    let (y, _) = prepare_initial(y0)?;
    let offset = k0 as i64 - j0 as i64;
    let out = run_engine(vec![x, y], vec![0, offset], opts, stream, &mut [])?;
    let mut xs = Vec::with_capacity(out.states.len());
    let mut ys = Vec::with_capacity(out.states.len());
    for mut s in out.states {
        let y = s.pop().expect("two processes");
        let x = s.pop().expect("two processes");
        xs.push(x);
        ys.push(y);
    }
    Ok(CoupledTrajectory {
        n,
        k0,
        j0,
        times: out.times,
        x: xs,
        y: ys,
        stats: out.stats,
        stream,
        opts: *opts,
    })
}
