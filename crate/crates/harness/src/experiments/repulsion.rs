use dbmlab_core::ensembles::{sample_deformed_many, sample_goe_many};
use dbmlab_core::freeconv::{classical_locations_sc, Time};
use dbmlab_core::stats::{bulk_index_set, level_repulsion_fit, log_grid, BulkIndexSet};

use super::{domain, free_convolution, stream, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

const KIND: &str = "repulsion";

/// Small-gap probabilities and their log-log exponent.
pub struct Repulsion;

fn is_goe(cfg: &ExperimentConfig) -> bool {
    cfg.ensemble.as_deref().unwrap_or("goe") == "goe"
}

impl Experiment for Repulsion {
    fn kind(&self) -> &'static str {
        KIND
    }

    fn summary(&self) -> &'static str {
        "level repulsion exponent of bulk nearest-neighbour gaps (GOE or deformed)"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        cfg.require_n()?;
        Ok(())
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let q = cfg.q_or(0.5);
        let count = cfg.samples.unwrap_or(10_000);
        let mut out = Outcome::default();
        let (samples, bulk, centers) = if is_goe(cfg) {
            let center = cfg.center.unwrap_or(0.0);
            let g = cfg.window.unwrap_or(0.5);
            let mu = classical_locations_sc(n);
            let start = mu.partition_point(|&x| x <= center - q * g);
            let end = mu.partition_point(|&x| x < center + q * g).max(start);
            let bulk = BulkIndexSet { q, start, end };
            let samples = sample_goe_many(n, stream(ctx.seed, domain::GOE), count).ctx(KIND)?;
            (samples, bulk, mu[start..end].to_vec())
        } else {
            let time = match (cfg.t, cfg.big_t) {
                (None, None) => Time::Ou(20.0 * cfg.scales(n).ell),
                _ => cfg.require_time()?,
            };
            out.record("time", time.value());
            let fc = free_convolution(cfg, n, time, KIND)?;
            let bulk = bulk_index_set(&fc, q);
            let samples = sample_deformed_many(fc.profile(), time, stream(ctx.seed, domain::DEFORMED), count).ctx(KIND)?;
            let centers = fc.classical_locations()[bulk.range()].to_vec();
            (samples, bulk, centers)
        };
        let eps = cfg.eps_grid.clone().unwrap_or_else(|| log_grid(0.05, 0.5, 10));
        let fit_window = cfg.pair(&cfg.fit_window, (0.05, 0.5));
        let rep = level_repulsion_fit(&samples, &bulk, &eps, &centers, fit_window).ctx(KIND)?;

        let rows = (0..rep.eps.len()).map(|k| {
            vec![
                num(rep.eps[k]),
                num(rep.gap_cdf[k]),
                num(rep.gap_cdf_double[k]),
                num(rep.interval_two[k]),
            ]
        });
        ctx.out.write_csv("repulsion.csv", &["eps", "gap_cdf", "gap_cdf_double", "interval_two"], rows)?;
        if ctx.plots {
            let pts = |v: &[f64]| rep.eps.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
            let svg = LinePlot::new("P[N gap <= eps]", "eps", "probability")
                .log_log()
                .series("gap cdf", pts(&rep.gap_cdf))
                .series("P[N_I >= 2]", pts(&rep.interval_two))
                .to_svg();
            ctx.out.write_text("repulsion.svg", &svg)?;
        }

        let (lo, hi) = cfg.pair(&cfg.exponent_range, (1.7, 2.3));
        let pass = rep.exponent_within(lo, hi);
        out.record("ensemble", if is_goe(cfg) { "goe" } else { "deformed" });
        out.record("bulk", (bulk.start, bulk.end));
        out.record("exponent", rep.exponent);
        out.record("interval_exponent", rep.interval_exponent);
        out.record("exponent_range", (lo, hi));
        out.record("fit_window", rep.fit_window);
        out.record("gap_observations", rep.gap_observations);
        out.record("interval_dominated", rep.interval_dominated());
        out.pass = pass;
        Ok(out)
    }
}
