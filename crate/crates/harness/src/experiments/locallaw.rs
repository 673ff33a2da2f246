use dbmlab_core::ensembles::sample_deformed_many;
use dbmlab_core::freeconv::{SolverOptions, SpectralPoint};
use dbmlab_core::stats::{local_law_check, log_grid};

use super::{domain, require, stream, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

const KIND: &str = "locallaw";

/// Empirical Stieltjes transforms against `m_fc` down to `eta = 10/N`.
pub struct LocalLaw;

impl Experiment for LocalLaw {
    fn kind(&self) -> &'static str {
        KIND
    }

    fn summary(&self) -> &'static str {
        "sup N eta |m_N - m_fc| over a bulk grid and its eta scaling"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        cfg.require_n()?;
        cfg.require_time()?;
        require(cfg, cfg.eta_count.is_none_or(|c| c >= 2), "eta_count", "must be at least 2")
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let time = cfg.require_time()?;
        let profile = cfg.build_profile(n)?;
        let sc = profile.scales();
        let q = cfg.q_or(0.5);
        let count = cfg.energy_count.unwrap_or(5);
        let energies: Vec<f64> = (0..count)
            .map(|k| sc.center - q * sc.window + (k as f64 + 0.5) * 2.0 * q * sc.window / count as f64)
            .collect();
        let eta_min = cfg.eta_min.unwrap_or(10.0 / n as f64);
        let eta_max = cfg.eta_max.unwrap_or(1.0);
        let etas = log_grid(eta_min, eta_max, cfg.eta_count.unwrap_or(12));
        let grid = energies
            .iter()
            .flat_map(|&e| etas.iter().map(move |&eta| SpectralPoint::new(e, eta)))
            .collect::<Result<Vec<_>, _>>()
            .ctx(KIND)?;
        let samples =
            sample_deformed_many(&profile, time, stream(ctx.seed, domain::DEFORMED), cfg.samples.unwrap_or(100))
                .ctx(KIND)?;
        let threshold = cfg.polylog_threshold(n);
        let rep = local_law_check(&profile, time, &samples, &grid, threshold, &SolverOptions::default()).ctx(KIND)?;

        let rows = rep.points.iter().map(|p| {
            vec![
                num(p.energy),
                num(p.eta),
                num(p.median_abs_error),
                num(p.median_scaled_error),
                num(p.max_scaled_error),
            ]
        });
        ctx.out.write_csv(
            "locallaw.csv",
            &["E", "eta", "median_abs_error", "median_scaled_error", "max_scaled_error"],
            rows,
        )?;
        if ctx.plots {
            let mut plot = LinePlot::new("|m_N - m_fc| against eta", "eta", "median error").log_log();
            for &e in &energies {
                let pts = rep
                    .points
                    .iter()
                    .filter(|p| p.energy == e)
                    .map(|p| (p.eta, p.median_abs_error))
                    .collect();
                plot = plot.series(&format!("E = {e:.3}"), pts);
            }
            let reference = etas.iter().map(|&eta| (eta, 1.0 / (n as f64 * eta))).collect();
            ctx.out.write_text("locallaw.svg", &plot.series("1/(N eta)", reference).to_svg())?;
        }

        let tol = cfg.slope_tolerance.unwrap_or(0.3);
        let slope_ok = rep.eta_slope.is_some_and(|s| (s + 1.0).abs() <= tol);
        let mut out = Outcome::default();
        out.record("sup_scaled_error", rep.sup_scaled_error);
        out.record("threshold", threshold);
        out.record("sup_pass", rep.pass);
        out.record("eta_slope", rep.eta_slope);
        out.record("slope_tolerance", tol);
        out.record("slope_pass", slope_ok);
        out.record("eta_range", (eta_min, eta_max));
        out.pass = rep.pass && slope_ok;
        Ok(out)
    }
}
