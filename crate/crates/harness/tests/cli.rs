use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dbm_lab::{validate_config, HarnessError, Registry};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dbm-lab")).args(args).output().unwrap()
}

#[test]
fn freeconv_semicircle_density_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = validate_config("N = 200\nT = 1.0\nprofile = \"zero\"\nE0 = 0.0\ngrid_points = 401\n").unwrap();
    let report = Registry::standard().run("freeconv", &cfg, Some(1), dir.path(), false).unwrap();
    assert!(report.pass);
    let mut rdr = csv::Reader::from_path(dir.path().join("density.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["E", "re_m", "im_m", "rho"]);
    let row = rdr
        .records()
        .map(|r| r.unwrap())
        .find(|r| r[0].parse::<f64>().unwrap().abs() < 1e-12)
        .expect("grid contains E = 0");
    let rho: f64 = row[3].parse().unwrap();
    assert!((rho - 1.0 / std::f64::consts::PI).abs() < 1e-4, "{rho}");
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn same_config_and_seed_give_identical_reports() {
    let cfg = validate_config("N = 60\nt = 0.2\nprofile = \"uniform\"\nE0 = 0.0\nG = 0.8\nsamples = 8\n").unwrap();
    let reg = Registry::standard();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    reg.run("rigidity", &cfg, Some(7), a.path(), false).unwrap();
    reg.run("rigidity", &cfg, Some(7), b.path(), false).unwrap();
    for name in ["report.json", "spectra.csv", "rigidity.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = tempfile::tempdir().unwrap();
    reg.run("rigidity", &cfg, Some(8), c.path(), false).unwrap();
    assert_ne!(fs::read(a.path().join("spectra.csv")).unwrap(), fs::read(c.path().join("spectra.csv")).unwrap());
}

#[test]
fn report_embeds_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = validate_config("N = 50\nT = 1.0\nprofile = \"zero\"\nseed = 3\n").unwrap();
    Registry::standard().run("freeconv", &cfg, None, dir.path(), false).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["config"]["kind"], "freeconv");
    assert_eq!(v["config"]["N"], 50);
    assert!(v["metrics"].is_object() && v["pass"].is_boolean());
}

#[test]
fn missing_n_names_the_field() {
    let cfg = validate_config("t = 0.1\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = Registry::standard().run("rigidity", &cfg, None, dir.path(), false).unwrap_err();
    assert!(matches!(&err, HarnessError::ConfigInvalid { field, .. } if field == "N"), "{err}");
    assert!(err.to_string().contains("`N`"));
}

#[test]
fn window_not_exceeding_ell_is_rejected() {
    let err = validate_config("N = 100\nt = 0.1\nell = 0.5\nG = 0.4\n").unwrap_err();
    match err {
        HarnessError::ConfigInvalid { field, line, reason } => {
            assert_eq!(field, "G");
            assert_eq!(line, Some(4));
            assert!(reason.contains("regularity"), "{reason}");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn parse_errors_carry_lines() {
    let err = validate_config("N = 10\nq = 0.5\nbogus = 1\n").unwrap_err();
    assert!(matches!(err, HarnessError::ConfigParse { line: 3, .. }), "{err}");
    let err = validate_config("N = 10\nq = 1.5\n").unwrap_err();
    assert!(matches!(err, HarnessError::ConfigInvalid { line: Some(2), .. }), "{err}");
}

#[test]
fn shipped_configs_parse() {
    let reg = Registry::standard();
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = dbm_lab::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let kind = cfg.kind.clone().expect("shipped configs name their kind");
            assert!(reg.get(&kind).is_some(), "{kind}");
            seen += 1;
        }
    }
    assert!(seen >= 9);
    let full = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/example.toml");
    dbm_lab::load_config(&full).unwrap();
}

#[test]
fn registry_lists_all_kinds() {
    let kinds = Registry::standard().kinds();
    for k in [
        "freeconv", "locallaw", "rigidity", "repulsion", "couple", "gapstats", "holder", "sdelaw", "propagator",
    ] {
        assert!(kinds.contains(&k), "{k}");
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fc.toml");
    fs::write(&cfg, "N = 50\nT = 1.0\nprofile = \"zero\"\n").unwrap();
    let out = dir.path().join("out");
    let ok = run_cli(&["freeconv", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--plots"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("report.json").exists() && out.join("density.svg").exists());

    let failing = dir.path().join("fail.toml");
    fs::write(&failing, "N = 40\nt = 0.5\nprofile = \"uniform\"\nE0 = 0.0\nsamples = 4\nthreshold = 1e-9\n").unwrap();
    let fail = run_cli(&["rigidity", "--config", failing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "t = 0.1\n").unwrap();
    assert_eq!(run_cli(&["rigidity", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run_cli(&["nosuch", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run_cli(&["freeconv", "--config", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn writes_stay_inside_output_directory() {
    let parent = tempfile::tempdir().unwrap();
    let out = parent.path().join("run");
    let cfg = validate_config("N = 50\nT = 1.0\nprofile = \"zero\"\n").unwrap();
    Registry::standard().run("freeconv", &cfg, None, &out, true).unwrap();
    let top: Vec<_> = fs::read_dir(parent.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec![std::ffi::OsString::from("run")]);
}

#[test]
fn kind_mismatch_is_rejected() {
    let cfg = validate_config("kind = \"holder\"\nN = 50\nt = 0.1\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = Registry::standard().run("rigidity", &cfg, None, dir.path(), false).unwrap_err();
    assert!(matches!(err, HarnessError::ConfigInvalid { ref field, line: Some(1), .. } if field == "kind"), "{err}");
}
