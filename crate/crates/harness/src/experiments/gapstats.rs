use dbmlab_core::ensembles::{sample_deformed_many, sample_goe_many};
use dbmlab_core::freeconv::semicircle_density;
use dbmlab_core::stats::{
    averaged_correlation_compare, bulk_index_set, gap_universality_distance, BootstrapOptions, CorrelationWindow,
    TestFunction,
};

use super::{domain, free_convolution, stream, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

const KIND: &str = "gapstats";

/// Gap universality between the deformed ensemble and GOE, plus averaged
/// one- and two-point correlations.
pub struct GapStats;

fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

impl Experiment for GapStats {
    fn kind(&self) -> &'static str {
        KIND
    }

    fn summary(&self) -> &'static str {
        "KS distance of rescaled central gaps, deformed ensemble against GOE"
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
        let count = cfg.samples.unwrap_or(400);
        let fc = free_convolution(cfg, n, time, KIND)?;
        let bulk = bulk_index_set(&fc, q);
        let sc = fc.profile().scales();
        let k0 = fc.index_near(sc.center);
        let j0 = n / 2;
        let deformed = sample_deformed_many(fc.profile(), time, stream(ctx.seed, domain::DEFORMED), count).ctx(KIND)?;
        let goe = sample_goe_many(n, stream(ctx.seed, domain::GOE), count).ctx(KIND)?;
        let boot = BootstrapOptions {
            resamples: cfg.resamples.unwrap_or(500),
            level: 0.95,
            stream: stream(ctx.seed, domain::BOOTSTRAP),
        };
        let rep = gap_universality_distance(&deformed, &goe, k0, j0, &fc, &bulk, &boot).ctx(KIND)?;

        let half_width = cfg.average_half_width.unwrap_or((n as f64).sqrt() / n as f64);
        let center = fc.classical_locations()[k0];
        let deformed_window = CorrelationWindow {
            center,
            half_width,
            density: fc.density_at(center),
            bulk: (sc.center - q * sc.window, sc.center + q * sc.window),
        };
        let goe_window = CorrelationWindow {
            center: 0.0,
            half_width,
            density: semicircle_density(0.0),
            bulk: (-2.0 * q, 2.0 * q),
        };
        let test = TestFunction::GaussianBump {
            width: cfg.bump_width.unwrap_or(1.0),
        };
        let mut correlations = Vec::new();
        for order in [1, 2] {
            let c = averaged_correlation_compare(&deformed, &goe, &deformed_window, &goe_window, test, order, &boot)
                .ctx(KIND)?;
            correlations.push(c);
        }

        let rows = rep
            .deformed_gaps
            .iter()
            .zip(&rep.goe_gaps)
            .enumerate()
            .map(|(s, (d, g))| vec![s.to_string(), num(*d), num(*g)]);
        ctx.out.write_csv("gaps.csv", &["sample_index", "deformed_gap", "goe_gap"], rows)?;
        ctx.out.write_spectra("spectra.csv", &deformed, cfg.csv_samples.unwrap_or(10))?;
        if ctx.plots {
            let svg = LinePlot::new("rescaled gap distribution", "gap", "cdf")
                .series("deformed", empirical_cdf(&rep.deformed_gaps))
                .series("GOE", empirical_cdf(&rep.goe_gaps))
                .to_svg();
            ctx.out.write_text("gaps.svg", &svg)?;
        }

        let ks_max = cfg.ks_max.unwrap_or(0.1);
        let factor = cfg.null_factor.unwrap_or(2.0);
        let mut out = Outcome::default();
        out.record("k0", k0);
        out.record("j0", j0);
        out.record("ks", rep.ks);
        out.record("ks_max", ks_max);
        out.record("null_band", rep.null_band);
        out.record("null_factor", factor);
        out.record("ks_interval", rep.ks_interval);
        out.record("deformed_density", rep.deformed_density);
        out.record("goe_density", rep.goe_density);
        out.record("correlations", &correlations);
        out.record("correlations_within_3_sigma", correlations.iter().all(|c| c.within_sigmas(3.0)));
        out.pass = rep.ks <= ks_max && rep.within_null(factor);
        Ok(out)
    }
}
