//! Acceptance run: one `[PASS]` or `[FAIL]` line per criterion, nonzero
//! exit status if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dbm_lab::{load_config, ExperimentReport, Registry};
use dbmlab_core::freeconv::{solve_mfc, PotentialProfile, ProfileScales, SolverOptions, SpectralPoint, Time};
use num_complex::Complex64;
use serde_json::Value;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn run(name: &str, work: &Path) -> Result<ExperimentReport, String> {
    let cfg = load_config(&configs().join(format!("{name}.toml"))).map_err(|e| e.to_string())?;
    let kind = cfg.kind.clone().ok_or("config has no kind")?;
    Registry::standard()
        .run(&kind, &cfg, Some(SEED), &work.join(name), false)
        .map_err(|e| e.to_string())
}

fn metric(r: &ExperimentReport, key: &str) -> f64 {
    r.metrics.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

/// Upper-half-plane root of `m^2 + z m + 1 = 0`.
fn semicircle_oracle(z: Complex64) -> Complex64 {
    let r = (z * z - 4.0).sqrt();
    let (a, b) = ((-z + r) / 2.0, (-z - r) / 2.0);
    if a.im > 0.0 {
        a
    } else {
        b
    }
}

fn semicircle_closed_form() -> Verdict {
    let n = 100;
    let p = PotentialProfile::zero(n, ProfileScales::for_size(n)).unwrap();
    let mut worst = 0.0_f64;
    for k in 0..100 {
        let e = -1.8 + 3.6 * k as f64 / 99.0;
        let eta = 1e-3 * (1.0 + (k % 7) as f64);
        let pt = SpectralPoint::new(e, eta).unwrap();
        let m = solve_mfc(&p, Time::Additive(1.0), pt, &SolverOptions::default(), None).unwrap();
        worst = worst.max((m - semicircle_oracle(Complex64::new(e, eta))).norm());
    }
    verdict(worst <= 1e-10, format!("max |m - m_sc| = {worst:.2e} <= 1e-10"))
}

fn zero_time_identity() -> Verdict {
    let n = 120;
    let sc = ProfileScales::for_size(n).with_window(0.0, 0.5);
    let profiles = [
        PotentialProfile::zero(n, sc).unwrap(),
        PotentialProfile::uniform(n, sc).unwrap(),
        PotentialProfile::two_atom(n, sc).unwrap(),
        PotentialProfile::rough(n, 10.0, sc.with_ell(0.02)).unwrap(),
    ];
    let (mut worst, mut worst_rel) = (0.0_f64, 0.0_f64);
    for p in &profiles {
        for k in 0..25 {
            let e = -2.0 + 4.0 * k as f64 / 24.0;
            for eta in [1e-3, 1e-2, 0.1, 1.0] {
                let z = Complex64::new(e, eta);
                let direct: Complex64 = p.entries().iter().map(|&v| 1.0 / (v - z)).sum::<Complex64>() / n as f64;
                for time in [Time::Additive(0.0), Time::Ou(0.0)] {
                    let m = solve_mfc(p, time, SpectralPoint::new(e, eta).unwrap(), &SolverOptions::default(), None)
                        .unwrap();
                    worst = worst.max((m - p.stieltjes(z)).norm());
                    worst_rel = worst_rel.max((m - direct).norm() / direct.norm());
                }
            }
        }
    }
    verdict(
        worst <= 1e-12 && worst_rel <= 1e-12,
        format!("max |m(0) - m_V| = {worst:.2e} <= 1e-12, relative to a direct entry sum {worst_rel:.2e} <= 1e-12"),
    )
}

fn law_equivalence(work: &Path) -> Result<Verdict, String> {
    let r = run("sdelaw", work)?;
    let ks = metric(&r, "ks");
    Ok(verdict(ks <= 0.05, format!("bulk-gap KS = {ks:.4} <= 0.05")))
}

fn rigidity(work: &Path) -> Result<Verdict, String> {
    let r = run("rigidity", work)?;
    let bound = 300f64.ln().powi(3);
    let med = metric(&r, "rigidity_median");
    Ok(verdict(med <= bound, format!("median max N|lambda - gamma| = {med:.3} <= {bound:.1}")))
}

fn local_law(work: &Path) -> Result<Verdict, String> {
    let r = run("locallaw", work)?;
    let bound = 300f64.ln().powi(3);
    let sup = metric(&r, "sup_scaled_error");
    let slope = metric(&r, "eta_slope");
    Ok(verdict(
        sup <= bound && (slope + 1.0).abs() <= 0.3,
        format!("sup N eta |dm| = {sup:.3} <= {bound:.1}, slope = {slope:.3} in [-1.3, -0.7]"),
    ))
}

fn repulsion(work: &Path) -> Result<Verdict, String> {
    let goe = metric(&run("repulsion_goe", work)?, "exponent");
    let def = metric(&run("repulsion_deformed", work)?, "exponent");
    let ok = |x: f64| (1.7..=2.3).contains(&x);
    Ok(verdict(
        ok(goe) && ok(def),
        format!("exponent GOE = {goe:.3}, deformed = {def:.3}, both in [1.7, 2.3]"),
    ))
}

fn gap_universality(work: &Path) -> Result<Verdict, String> {
    let r = run("gapstats", work)?;
    let ks = metric(&r, "ks");
    let band = metric(&r, "null_band");
    Ok(verdict(
        ks <= 0.1 && ks <= 2.0 * band,
        format!("KS = {ks:.4} <= 0.1 and <= 2 x null band {band:.4}"),
    ))
}

fn coupling(work: &Path) -> Result<Verdict, String> {
    let r = run("couple", work)?;
    let start = metric(&r, "median_start");
    let window = metric(&r, "median_window");
    let ratio = start / window;
    Ok(verdict(
        ratio >= 3.0,
        format!("median gap difference {start:.3} -> {window:.3}, contraction {ratio:.2} >= 3"),
    ))
}

fn propagator(work: &Path) -> Result<Verdict, String> {
    let r = run("propagator", work)?;
    let rows = metric(&r, "row_sum_error");
    let sup = metric(&r, "sup_norm");
    let decay = metric(&r, "decay_exponent");
    let identity = r.metrics.get("identity_at_equal_times").and_then(Value::as_bool) == Some(true);
    Ok(verdict(
        rows <= 1e-10 && sup <= 1.0 + 1e-10 && identity && decay <= -0.8,
        format!("row sums {rows:.1e}, sup norm {sup:.12}, identity {identity}, decay exponent {decay:.3} <= -0.8"),
    ))
}

fn holder(work: &Path) -> Result<Verdict, String> {
    let r = run("holder", work)?;
    let med = metric(&r, "median_exponent");
    Ok(verdict(med > 0.05, format!("median fitted exponent {med:.3} > 0.05 over 20 kernels")))
}

fn determinism(work: &Path) -> Result<Verdict, String> {
    let a = work.join("det_a");
    let b = work.join("det_b");
    fs::create_dir_all(&a).map_err(|e| e.to_string())?;
    fs::create_dir_all(&b).map_err(|e| e.to_string())?;
    let mut identical = true;
    for name in ["gapstats", "propagator"] {
        run(name, &a)?;
        run(name, &b)?;
        let ra = fs::read(a.join(name).join("report.json")).map_err(|e| e.to_string())?;
        let rb = fs::read(b.join(name).join("report.json")).map_err(|e| e.to_string())?;
        identical &= ra == rb;
    }
    Ok(verdict(identical, "gapstats and propagator reports byte-identical on re-run".into()))
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let work = work.path();
    type Check<'a> = Box<dyn Fn() -> Result<Verdict, String> + 'a>;
    let checks: Vec<(u32, &str, Check)> = vec![
        (1, "semicircle closed form", Box::new(|| Ok(semicircle_closed_form()))),
        (2, "zero-time identity", Box::new(|| Ok(zero_time_identity()))),
        (3, "SDE law equivalence", Box::new(|| law_equivalence(work))),
        (4, "rigidity", Box::new(|| rigidity(work))),
        (5, "local law", Box::new(|| local_law(work))),
        (6, "level repulsion", Box::new(|| repulsion(work))),
        (7, "gap universality", Box::new(|| gap_universality(work))),
        (8, "coupling contraction", Box::new(|| coupling(work))),
        (9, "propagator properties", Box::new(|| propagator(work))),
        (10, "Hölder decay", Box::new(|| holder(work))),
        (11, "determinism", Box::new(|| determinism(work))),
    ];
    let mut failed = 0;
    for (id, name, check) in &checks {
        let start = Instant::now();
        let v = check().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>2} {name}: {} ({:.1} s)", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
