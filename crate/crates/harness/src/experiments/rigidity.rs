use dbmlab_core::ensembles::sample_deformed_many;
use dbmlab_core::stats::{bulk_index_set, counting_error, rigidity_check};

use super::{domain, free_convolution, stream, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

const KIND: &str = "rigidity";

/// Eigenvalue rigidity and counting-function error in the bulk window.
pub struct Rigidity;

impl Experiment for Rigidity {
    fn kind(&self) -> &'static str {
        KIND
    }

    fn summary(&self) -> &'static str {
        "max bulk N|lambda_i - gamma_i| and counting error of direct samples"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        cfg.require_n()?;
        cfg.require_time()?;
        Ok(())
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let time = cfg.require_time()?;
        let q = cfg.q_or(0.5);
        let fc = free_convolution(cfg, n, time, KIND)?;
        let bulk = bulk_index_set(&fc, q);
        let samples =
            sample_deformed_many(fc.profile(), time, stream(ctx.seed, domain::DEFORMED), cfg.samples.unwrap_or(100))
                .ctx(KIND)?;
        let threshold = cfg.polylog_threshold(n);
        let rig = rigidity_check(&fc, &samples, &bulk, threshold).ctx(KIND)?;
        let sc = fc.profile().scales();
        let window = (sc.center - q * sc.window, sc.center + q * sc.window);
        let cnt = counting_error(&samples, &fc, window, threshold).ctx(KIND)?;

        ctx.out.write_spectra("spectra.csv", &samples, cfg.csv_samples.unwrap_or(10))?;
        let rows = fc
            .classical_locations()
            .iter()
            .enumerate()
            .map(|(i, g)| vec![i.to_string(), num(*g)]);
        ctx.out.write_csv("classical.csv", &["i", "gamma"], rows)?;
        let rows = rig
            .per_sample_max
            .iter()
            .zip(&cnt.per_sample_sup)
            .enumerate()
            .map(|(s, (r, c))| vec![s.to_string(), num(*r), num(*c)]);
        ctx.out.write_csv("rigidity.csv", &["sample_index", "max_scaled_error", "counting_error"], rows)?;
        if ctx.plots {
            let pts = rig
                .per_index_median
                .iter()
                .enumerate()
                .map(|(k, v)| ((bulk.start + k) as f64, *v))
                .collect();
            let svg = LinePlot::new("median N|lambda_i - gamma_i|", "i", "error").series("median", pts).to_svg();
            ctx.out.write_text("rigidity.svg", &svg)?;
        }

        let (center_err, edge_err) = rig.center_and_edge();
        let mut out = Outcome::default();
        out.record("bulk", (bulk.start, bulk.end));
        out.record("threshold", threshold);
        out.record("rigidity", rig.summary);
        out.record("rigidity_median", rig.summary.median);
        out.record("rigidity_pass", rig.pass);
        out.record("center_error", center_err);
        out.record("edge_error", edge_err);
        out.record("counting", cnt.summary);
        out.record("counting_median", cnt.summary.median);
        out.record("counting_pass", cnt.pass);
        out.pass = rig.pass && cnt.pass;
        Ok(out)
    }
}
