use std::sync::Arc;

use dbmlab_core::freeconv::{
    semicircle_stieltjes, solve_mfc, solve_mfc_grid, SolverOptions, SpectralPoint, Time,
};
use num_complex::Complex64;

use super::{require, Experiment, Outcome, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{Context, HarnessError};
use crate::output::num;
use crate::plots::LinePlot;

const KIND: &str = "freeconv";

/// Density of the deformed semicircle law and classical locations.
pub struct FreeConv;

/// Symmetric grid around the middle of the support, so that the midpoint
/// is hit exactly.
fn grid(profile_lo: f64, profile_hi: f64, time: Time, points: usize) -> Vec<f64> {
    let r = 2.0 * time.variance().sqrt();
    let s = time.scale();
    let (lo, hi) = (s * profile_lo - r, s * profile_hi + r);
    let pad = 0.1 * (hi - lo).max(0.5);
    let mid = 0.5 * (lo + hi);
    let half = (points.max(3) - 1) / 2;
    let h = (0.5 * (hi - lo) + pad) / half as f64;
    (0..=2 * half).map(|k| mid + h * (k as f64 - half as f64)).collect()
}

/// Largest error against the closed form, for `V = 0` only.
fn semicircle_error(profile: &dbmlab_core::freeconv::PotentialProfile, time: Time) -> Result<f64, HarnessError> {
    let tau = time.variance();
    let opts = SolverOptions::default();
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let e = 2.0 * tau.sqrt() * (-0.9 + 1.8 * k as f64 / 99.0);
        let point = SpectralPoint::new(e, 1e-3).ctx(KIND)?;
        let m = solve_mfc(profile, time, point, &opts, None).ctx(KIND)?;
        let exact = semicircle_stieltjes(point.z() / tau.sqrt()) / tau.sqrt();
        worst = worst.max((m - exact).norm());
    }
    Ok(worst)
}

/// `|m(T = 0) - m_V|` at a few points across the profile.
fn zero_time_error(profile: &dbmlab_core::freeconv::PotentialProfile) -> Result<f64, HarnessError> {
    let e = profile.entries();
    let (lo, hi) = (e[0] - 1.0, e[e.len() - 1] + 1.0);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let energy = lo + (hi - lo) * k as f64 / 19.0;
        for eta in [1e-2, 1e-1, 1.0] {
            let point = SpectralPoint::new(energy, eta).ctx(KIND)?;
            let m = solve_mfc(profile, Time::Additive(0.0), point, &SolverOptions::default(), None).ctx(KIND)?;
            worst = worst.max((m - profile.stieltjes(Complex64::new(energy, eta))).norm());
        }
    }
    Ok(worst)
}

impl Experiment for FreeConv {
    fn kind(&self) -> &'static str {
        KIND
    }

    fn summary(&self) -> &'static str {
        "density, Stieltjes transform and classical locations of the free convolution"
    }

    fn validate(&self, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
        cfg.require_n()?;
        cfg.require_time()?;
        require(cfg, cfg.grid_points.is_none_or(|p| p >= 3), "grid_points", "must be at least 3")
    }

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> Result<Outcome, HarnessError> {
        let n = cfg.require_n()?;
        let time = cfg.require_time()?;
        let profile = Arc::new(cfg.build_profile(n)?);
        let e = profile.entries();
        let energies = grid(e[0], e[e.len() - 1], time, cfg.grid_points.unwrap_or(2001));
        let eta = cfg.eta_min.unwrap_or(1e-6);
        let fc = solve_mfc_grid(profile.clone(), time, &energies, Some(eta), &SolverOptions::default()).ctx(KIND)?;

        let rows = fc
            .energies()
            .iter()
            .zip(fc.stieltjes_values())
            .zip(fc.density())
            .map(|((e, m), rho)| vec![num(*e), num(m.re), num(m.im), num(*rho)]);
        ctx.out.write_csv("density.csv", &["E", "re_m", "im_m", "rho"], rows)?;
        let rows = fc
            .classical_locations()
            .iter()
            .enumerate()
            .map(|(i, g)| vec![i.to_string(), num(*g)]);
        ctx.out.write_csv("classical.csv", &["i", "gamma"], rows)?;
        if ctx.plots {
            let pts: Vec<(f64, f64)> = fc.energies().iter().copied().zip(fc.density().iter().copied()).collect();
            let svg = LinePlot::new("free convolution density", "E", "rho").series("rho_fc", pts).to_svg();
            ctx.out.write_text("density.svg", &svg)?;
        }

        let center = profile.scales().center;
        let mut out = Outcome::default();
        out.record("mass", fc.mass());
        out.record("eta", eta);
        out.record("E0", center);
        out.record("density_at_E0", fc.density_at(center));
        out.record("support_grid", (energies[0], energies[energies.len() - 1]));
        let t0 = zero_time_error(&profile)?;
        out.record("zero_time_identity_error", t0);
        let mut pass = t0 <= 1e-12;
        if profile.label() == "zero" && !time.is_zero() {
            let sc = semicircle_error(&profile, time)?;
            out.record("semicircle_error", sc);
            pass &= sc <= 1e-10;
        }
        out.pass = pass;
        Ok(out)
    }
}
