//! Experiments built on coupled runs from matched initial data.

use dbmlab_core::dbm::{
    gap_difference, holder_check, integrate_coupled, matched_initial_data, path_rigidity_fraction, propagator,
    CoupledTrajectory, DbmOptions, HolderReport, ParabolicKernel,
};
use dbmlab_core::freeconv::{FreeConvolution, MatchingParams, Time};
use dbmlab_core::stats::Summary;
use rand::Rng;
use rayon::prelude::*;

use super::{domain, free_convolution, median, require, stream, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

/// Matched pair `(x, y)` integrated for `micro_duration` microscopic time
/// units from the free convolution time `t`.
fn coupled_run(
    cfg: &ExperimentConfig,
    fc: &FreeConvolution,
    seed: u64,
    path: u64,
    micro_duration: f64,
    default_micro_dt: f64,
    kind: &'static str,
) -> Result<(CoupledTrajectory, MatchingParams), HarnessError> {
    let n = fc.n();
    let nf = n as f64;
    let k0 = fc.index_near(fc.profile().scales().center);
    let j0 = n / 2;
    let setup = matched_initial_data(
        fc,
        k0,
        j0,
        cfg.q_or(0.5),
        cfg.alpha.unwrap_or(0.1),
        stream(seed, domain::SETUP).index(path),
    )
    .ctx(kind)?;
    let dt = cfg.dt.unwrap_or(default_micro_dt / nf);
    let opts = DbmOptions::new(micro_duration / nf, dt).starting_at(setup.t_start);
    let tr = integrate_coupled(&setup.x0, &setup.y0, k0, j0, &opts, stream(seed, domain::PATHS).index(path)).ctx(kind)?;
    Ok((tr, setup.matching))
}

fn validate_coupled(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let n = cfg.require_n()?;
    cfg.require_ou_time()?;
    let k = cfg.cutoff_or(n, 0);
    require(cfg, k == 0 || 2 * k + 2 <= n, "K", "window of 2K + 1 labels does not fit in N")
}

fn time_of(cfg: &ExperimentConfig) -> Result<Time, HarnessError> {
    Ok(Time::Ou(cfg.require_ou_time()?))
}

/// Contraction of local gap differences between two coupled motions.
pub struct Couple;

const COUPLE: &str = "couple";

impl Experiment for Couple {
    fn kind(&self) -> &'static str {
        COUPLE
    }

    fn summary(&self) -> &'static str {
        "contraction of N |gap difference| between matched coupled motions"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        validate_coupled(cfg)
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let nf = n as f64;
        let k = cfg.cutoff_or(n, 32);
        let omega = cfg.omega_prime_for(n, k);
        let hi = nf.powf(omega / 10.0);
        let lo = (hi - nf.powf(omega / 30.0)).max(0.0);
        let range = cfg.gap_range.unwrap_or(5);
        let paths = cfg.paths.unwrap_or(50);
        let fc = free_convolution(cfg, n, time_of(cfg)?, COUPLE)?;
        let seed = ctx.seed;
        let runs = (0..paths as u64)
            .into_par_iter()
            .map(|p| -> Result<_, HarnessError> {
                let (tr, matching) = coupled_run(cfg, &fc, seed, p, hi, 0.01, COUPLE)?;
                let d0 = gap_difference(&tr, 0, range);
                let d1 = (0..tr.len())
                    .filter(|&m| {
                        let s = tr.micro_time(m);
                        s >= lo - 1e-9 && s <= hi + 1e-9
                    })
                    .map(|m| gap_difference(&tr, m, range))
                    .fold(0.0_f64, f64::max);
                let rigidity = path_rigidity_fraction(&tr, k, 0.1, 10.0);
                let keep = if p == 0 { Some(tr.clone()) } else { None };
                Ok((d0, d1, rigidity, matching.sweep_max, tr.stats.rejected_steps, keep))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let d0: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let d1: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let rows = runs
            .iter()
            .enumerate()
            .map(|(p, r)| vec![p.to_string(), num(r.0), num(r.1), num(r.2)]);
        ctx.out.write_csv("paths.csv", &["path", "gap_difference_start", "gap_difference_window", "rigidity_fraction"], rows)?;
        if let Some(tr) = runs.first().and_then(|r| r.5.as_ref()) {
            let kk = k as i64;
            let rows = (0..tr.len()).flat_map(|m| {
                (-kk..=kk).map(move |j| {
                    vec![
                        num(tr.times[m]),
                        j.to_string(),
                        num(tr.x[m][(tr.k0 as i64 + j) as usize]),
                        num(tr.y[m][(tr.j0 as i64 + j) as usize]),
                    ]
                })
            });
            ctx.out.write_csv("trajectories.csv", &["time", "j", "x", "y"], rows)?;
            if ctx.plots {
                let pts = (0..tr.len()).map(|m| (tr.micro_time(m), gap_difference(tr, m, range))).collect();
                let svg = LinePlot::new("N |gap difference|, path 0", "N (t - t0)", "sup difference")
                    .series("gap difference", pts)
                    .to_svg();
                ctx.out.write_text("couple.svg", &svg)?;
            }
        }

        let (m0, m1) = (median(&d0), median(&d1));
        let ratio = m0 / m1;
        let factor = cfg.contraction_factor.unwrap_or(3.0);
        let mut out = Outcome::default();
        out.record("K", k);
        out.record("omega_prime", omega);
        out.record("window", (lo, hi));
        out.record("median_start", m0);
        out.record("median_window", m1);
        out.record("contraction", ratio);
        out.record("contraction_factor", factor);
        out.record("start", Summary::of(&d0));
        out.record("in_window", Summary::of(&d1));
        out.record("path_rigidity_fraction", median(&runs.iter().map(|r| r.2).collect::<Vec<_>>()));
        out.record("matching_sweep_max", median(&runs.iter().map(|r| r.3).collect::<Vec<_>>()));
        out.record("rejected_steps", runs.iter().map(|r| r.4).sum::<u64>());
        out.pass = ratio >= factor;
        Ok(out)
    }
}

/// Hölder decay of parabolic solutions on harvested kernels.
pub struct Holder;

const HOLDER: &str = "holder";

impl Experiment for Holder {
    fn kind(&self) -> &'static str {
        HOLDER
    }

    fn summary(&self) -> &'static str {
        "Hölder exponent of parabolic solutions on kernels from coupled runs"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        validate_coupled(cfg)?;
        if let Some(p) = &cfg.sigma_powers {
            require(cfg, p.len() >= 2 && p.iter().all(|&x| x > 0.0), "sigma_powers", "needs at least two positive powers")?;
        }
        Ok(())
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let k = cfg.cutoff_or(n, 32);
        let powers = cfg.sigma_powers.clone().unwrap_or_else(|| vec![0.3, 0.5, 0.7]);
        let sigmas: Vec<f64> = powers.iter().map(|p| (k as f64).powf(*p)).collect();
        let horizon = sigmas.iter().copied().fold(0.0, f64::max) + 1.0;
        let eps = cfg.epsilon.unwrap_or(1e-12);
        let stride = cfg.stride.unwrap_or(1);
        let min_exponent = cfg.min_exponent.unwrap_or(0.05);
        let fc = free_convolution(cfg, n, time_of(cfg)?, HOLDER)?;
        let seed = ctx.seed;
        let reports = (0..cfg.paths.unwrap_or(20) as u64)
            .into_par_iter()
            .map(|p| -> Result<HolderReport, HarnessError> {
                let (tr, _) = coupled_run(cfg, &fc, seed, p, horizon, 0.05, HOLDER)?;
                let kernel = ParabolicKernel::from_trajectory(&tr, k, eps, stride).ctx(HOLDER)?;
                let mut rng = stream(seed, domain::TEST_DATA).index(p).rng();
                let v0: Vec<f64> = (0..kernel.width())
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                holder_check(&kernel, &v0, &sigmas, min_exponent).ctx(HOLDER)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let rows = reports.iter().enumerate().flat_map(|(p, r)| {
            r.points
                .iter()
                .map(move |pt| vec![p.to_string(), num(pt.sigma), num(pt.ratio), num(r.exponent)])
        });
        ctx.out.write_csv("holder.csv", &["kernel", "sigma", "ratio", "exponent"], rows)?;
        if ctx.plots {
            let mut plot = LinePlot::new("oscillation ratio against sigma", "sigma", "ratio").log_log();
            for (p, r) in reports.iter().enumerate().take(4) {
                plot = plot.series(&format!("kernel {p}"), r.points.iter().map(|pt| (pt.sigma, pt.ratio)).collect());
            }
            ctx.out.write_text("holder.svg", &plot.to_svg())?;
        }

        let exponents: Vec<f64> = reports.iter().map(|r| r.exponent).collect();
        let med = median(&exponents);
        let mut out = Outcome::default();
        out.record("K", k);
        out.record("sigmas", &sigmas);
        out.record("median_exponent", med);
        out.record("min_exponent", min_exponent);
        out.record("exponents", Summary::of(&exponents));
        out.record("kernels_passing", reports.iter().filter(|r| r.passes).count());
        out.pass = med > min_exponent;
        Ok(out)
    }
}

/// Row sums, positivity, contraction and off-diagonal decay of the
/// propagator of the parabolic equation.
pub struct Propagator;

const PROPAGATOR: &str = "propagator";

impl Experiment for Propagator {
    fn kind(&self) -> &'static str {
        PROPAGATOR
    }

    fn summary(&self) -> &'static str {
        "propagator of the parabolic equation on a kernel from one coupled run"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        validate_coupled(cfg)
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let k = cfg.cutoff_or(n, 64);
        let fc = free_convolution(cfg, n, time_of(cfg)?, PROPAGATOR)?;
        let duration = (k as f64).powf(0.1);
        let (tr, _) = coupled_run(cfg, &fc, ctx.seed, 0, duration, 0.05, PROPAGATOR)?;
        let kernel = ParabolicKernel::from_trajectory(&tr, k, cfg.epsilon.unwrap_or(1e-12), cfg.stride.unwrap_or(1))
            .ctx(PROPAGATOR)?;
        let (s, t) = (kernel.times[0], *kernel.times.last().expect("kernel has times"));
        let u = propagator(&kernel, s, t).ctx(PROPAGATOR)?;
        let id = propagator(&kernel, s, s).ctx(PROPAGATOR)?;
        let w = u.width();
        let identity = (0..w).all(|a| (0..w).all(|p| id.get(a, p) == if a == p { 1.0 } else { 0.0 }));
        let radius = (k as f64).sqrt().floor() as usize;
        let decay = u.decay_exponent(radius, k);

        let mut header = vec!["a".to_string()];
        header.extend((0..w).map(|p| (p as i64 - k as i64).to_string()));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = (0..w).map(|a| {
            let mut row = vec![(a as i64 - k as i64).to_string()];
            row.extend((0..w).map(|p| num(u.get(a, p))));
            row
        });
        ctx.out.write_csv("propagator.csv", &header, rows)?;
        let env = u.decay_envelope(radius);
        if ctx.plots {
            let pts = env.iter().enumerate().skip(1).map(|(d, e)| ((d + 1) as f64, *e)).collect();
            let reference = (1..w).map(|d| ((d + 1) as f64, 1.0 / (d + 1) as f64)).collect();
            let svg = LinePlot::new("propagator decay envelope", "|a - p| + 1", "max |U_ap|")
                .log_log()
                .series("envelope", pts)
                .series("1/(d+1)", reference)
                .to_svg();
            ctx.out.write_text("propagator.svg", &svg)?;
        }

        let row_err = u.max_row_sum_error();
        let min_entry = u.min_entry();
        let sup = u.sup_norm();
        let decay_max = cfg.decay_max.unwrap_or(-0.8);
        let mut out = Outcome::default();
        out.record("K", k);
        out.record("micro_interval", (s, t));
        out.record("row_sum_error", row_err);
        out.record("min_entry", min_entry);
        out.record("sup_norm", sup);
        out.record("identity_at_equal_times", identity);
        out.record("decay_exponent", decay);
        out.record("decay_max", decay_max);
        out.record("envelope", &env);
        out.pass = row_err <= 1e-10 && min_entry >= -1e-12 && sup <= 1.0 + 1e-10 && identity && decay <= decay_max;
        Ok(out)
    }
}
