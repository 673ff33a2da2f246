//! Experiment registry. Each kind named on the command line maps to one
//! [`Experiment`] implementation.

mod coupled;
mod freeconv;
mod gapstats;
mod locallaw;
mod repulsion;
mod rigidity;
mod sdelaw;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::output::OutputDir;

pub const SCHEMA_VERSION: u32 = 1;

/// Stream domains, so experiments that share a seed draw independent noise.
pub(crate) mod domain {
    pub const DEFORMED: u64 = 1;
    pub const GOE: u64 = 2;
    pub const PATHS: u64 = 3;
    pub const SETUP: u64 = 4;
    pub const BOOTSTRAP: u64 = 0xb007;
    pub const TEST_DATA: u64 = 5;
}

/// What an experiment needs besides its config.
pub struct RunContext {
    pub seed: u64,
    pub out: OutputDir,
    pub plots: bool,
}

/// Metrics and verdict of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub metrics: BTreeMap<String, Value>,
    pub pass: bool,
}

impl Outcome {
    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }
}

pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Checks the kind-specific keys before any work is done.
    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError>;
    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError>;
}

pub struct Registry {
    entries: Vec<Box<dyn Experiment>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: Vec::new() }
    }

    /// All built-in experiments.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(freeconv::FreeConv));
        r.register(Box::new(locallaw::LocalLaw));
        r.register(Box::new(rigidity::Rigidity));
        r.register(Box::new(repulsion::Repulsion));
        r.register(Box::new(coupled::Couple));
        r.register(Box::new(gapstats::GapStats));
        r.register(Box::new(coupled::Holder));
        r.register(Box::new(sdelaw::SdeLaw));
        r.register(Box::new(coupled::Propagator));
        r
    }

    /// Adds `exp`, replacing any experiment of the same kind.
    pub fn register(&mut self, exp: Box<dyn Experiment>) {
        self.entries.retain(|e| e.kind() != exp.kind());
        self.entries.push(exp);
    }

    pub fn get(&self, kind: &str) -> Option<&dyn Experiment> {
        self.entries.iter().find(|e| e.kind() == kind).map(|e| e.as_ref())
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.kind()).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.kind(), e.summary())).collect()
    }

    /// Validates, runs and writes `report.json` into `out`.
    pub fn run(
        &self,
        kind: &str,
        cfg: &ExperimentConfig,
        seed: Option<u64>,
        out: &Path,
        plots: bool,
    ) -> Result<ExperimentReport, HarnessError> {
        let exp = self.get(kind).ok_or_else(|| HarnessError::UnknownKind(kind.to_string()))?;
        if let Some(k) = &cfg.kind {
            if k != kind {
                return Err(cfg.invalid("kind", format!("config is for `{k}` but `{kind}` was requested")));
            }
        }
        let seed = seed.or(cfg.seed).unwrap_or(0);
        let mut cfg = cfg.clone();
        cfg.kind = Some(kind.to_string());
        cfg.seed = Some(seed);
        exp.validate(&cfg)?;
        let mut ctx = RunContext {
            seed,
            out: OutputDir::create(out)?,
            plots,
        };
        let outcome = exp.run(&cfg, &mut ctx)?;
        let report = ExperimentReport {
            schema_version: SCHEMA_VERSION,
            config: cfg,
            seed,
            metrics: outcome.metrics,
            pass: outcome.pass,
        };
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        ctx.out.write_text("report.json", &json)?;
        Ok(report)
    }
}

/// The `report.json` document.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub metrics: BTreeMap<String, Value>,
    pub pass: bool,
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    dbmlab_core::stats::quantile_sorted(&v, 0.5)
}

pub(crate) fn require(cfg: &ExperimentConfig, ok: bool, field: &str, reason: &str) -> Result<(), HarnessError> {
    if ok {
        Ok(())
    } else {
        Err(cfg.invalid(field, reason))
    }
}

/// Free convolution of the configured profile at `time`.
pub(crate) fn free_convolution(
    cfg: &ExperimentConfig,
    n: usize,
    time: dbmlab_core::freeconv::Time,
    kind: &'static str,
) -> Result<dbmlab_core::freeconv::FreeConvolution, HarnessError> {
    use crate::error::Context;
    let profile = std::sync::Arc::new(cfg.build_profile(n)?);
    dbmlab_core::freeconv::FreeConvolution::compute(
        profile,
        time,
        cfg.grid_points.unwrap_or(2001),
        &dbmlab_core::freeconv::SolverOptions::default(),
    )
    .ctx(kind)
}

pub(crate) fn stream(seed: u64, domain: u64) -> dbmlab_core::rng::RngStream {
    dbmlab_core::rng::RngStream::new(seed, 0).with_domain(domain)
}
