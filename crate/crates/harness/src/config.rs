//! Flat key-value experiment configuration.
//!
//! A config is a TOML document without tables. Keys follow the symbols of
//! the model: `N`, `t` (Ornstein-Uhlenbeck time) or `T` (additive time),
//! `ell`, `G`, `E0`, `K`, `omega_prime`, `q`. Every key is optional at parse
//! time; each experiment checks the keys it needs. See `docs/config.md`.

use std::path::{Path, PathBuf};

use dbmlab_core::freeconv::{PotentialProfile, ProfileScales, Time};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub big_t: Option<f64>,
    /// `zero`, `uniform`, `two_atom`, `rough` or `file`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rough_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(rename = "E0", skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// `goe` or `deformed` (repulsion only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_powers: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_range: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sde_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bump_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_half_width: Option<f64>,
    /// Overrides the default threshold of the experiment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Power `p` of the `(log N)^p` threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polylog_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_range: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_max: Option<f64>,
    /// At most this many samples are written to spectra CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip)]
    source: String,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

/// 1-based line of the first `key =` assignment in `text`.
pub fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let line = line.trim_start();
        let quoted = format!("\"{key}\"");
        let rest = line
            .strip_prefix(key)
            .or_else(|| line.strip_prefix(quoted.as_str()));
        rest.is_some_and(|r| r.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_at_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a config document.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::ConfigParse {
        line: e.span().map(|s| line_at_offset(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    cfg.source = text.to_string();
    cfg.check_common()?;
    Ok(cfg)
}

/// Reads `path` and validates it; profile files are resolved next to it.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = validate_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

impl ExperimentConfig {
    /// Error for `field` pointing at its line in the source text.
    pub fn invalid(&self, field: &str, reason: impl Into<String>) -> HarnessError {
        HarnessError::ConfigInvalid {
            field: field.to_string(),
            line: line_of(&self.source, field),
            reason: reason.into(),
        }
    }

    fn missing(&self, field: &str) -> HarnessError {
        HarnessError::ConfigInvalid {
            field: field.to_string(),
            line: None,
            reason: "required by this experiment but missing".into(),
        }
    }

    fn check_common(&self) -> Result<(), HarnessError> {
        let positive = |name: &str, v: Option<f64>| -> Result<(), HarnessError> {
            match v {
                Some(x) if !(x > 0.0 && x.is_finite()) => Err(self.invalid(name, format!("must be positive, got {x}"))),
                _ => Ok(()),
            }
        };
        let non_negative = |name: &str, v: Option<f64>| -> Result<(), HarnessError> {
            match v {
                Some(x) if !(x >= 0.0 && x.is_finite()) => {
                    Err(self.invalid(name, format!("must be non-negative, got {x}")))
                }
                _ => Ok(()),
            }
        };
        if self.n == Some(0) {
            return Err(self.invalid("N", "must be at least 1"));
        }
        if self.t.is_some() && self.big_t.is_some() {
            return Err(self.invalid("T", "give either `t` or `T`, not both"));
        }
        non_negative("t", self.t)?;
        non_negative("T", self.big_t)?;
        positive("ell", self.ell)?;
        positive("G", self.window)?;
        positive("dt", self.dt)?;
        positive("omega_prime", self.omega_prime)?;
        positive("rough_scale", self.rough_scale)?;
        positive("eta_min", self.eta_min)?;
        positive("eta_max", self.eta_max)?;
        positive("bump_width", self.bump_width)?;
        positive("average_half_width", self.average_half_width)?;
        non_negative("epsilon", self.epsilon)?;
        if let Some(e) = self.center {
            if !e.is_finite() {
                return Err(self.invalid("E0", "must be finite"));
            }
        }
        if let (Some(ell), Some(g)) = (self.ell, self.window) {
            if g <= ell {
                return Err(self.invalid(
                    "G",
                    format!("regularity requires the window G to exceed ell, got G = {g} <= ell = {ell}"),
                ));
            }
        }
        for (name, v) in [("q", self.q), ("alpha", self.alpha)] {
            if let Some(x) = v {
                if !(x > 0.0 && x < 1.0) {
                    return Err(self.invalid(name, format!("must lie in (0, 1), got {x}")));
                }
            }
        }
        if let (Some(a), Some(b)) = (self.eta_min, self.eta_max) {
            if a > b {
                return Err(self.invalid("eta_min", "must not exceed eta_max"));
            }
        }
        if let Some(g) = &self.eps_grid {
            if g.is_empty() || g.iter().any(|&e| !(e > 0.0)) {
                return Err(self.invalid("eps_grid", "must be a non-empty list of positive numbers"));
            }
        }
        for (name, v) in [
            ("fit_window", &self.fit_window),
            ("exponent_range", &self.exponent_range),
        ] {
            if let Some(w) = v {
                if w.len() != 2 || !(w[0] < w[1]) {
                    return Err(self.invalid(name, "must be a list [lo, hi] with lo < hi"));
                }
            }
        }
        if let Some(p) = &self.profile {
            if !["zero", "uniform", "two_atom", "rough", "file"].contains(&p.as_str()) {
                return Err(self.invalid(
                    "profile",
                    format!("unknown preset `{p}`; expected zero, uniform, two_atom, rough or file"),
                ));
            }
            if p == "file" && self.profile_file.is_none() {
                return Err(self.invalid("profile", "preset `file` needs `profile_file`"));
            }
        }
        if let Some(e) = &self.ensemble {
            if e != "goe" && e != "deformed" {
                return Err(self.invalid("ensemble", format!("expected goe or deformed, got `{e}`")));
            }
        }
        for (name, v) in [
            ("samples", self.samples),
            ("paths", self.paths),
            ("K", self.cutoff),
            ("grid_points", self.grid_points),
            ("eta_count", self.eta_count),
            ("energy_count", self.energy_count),
            ("stride", self.stride),
            ("resamples", self.resamples),
        ] {
            if v == Some(0) {
                return Err(self.invalid(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn require_n(&self) -> Result<usize, HarnessError> {
        self.n.ok_or_else(|| self.missing("N"))
    }

    /// `Time::Ou(t)` or `Time::Additive(T)`.
    pub fn require_time(&self) -> Result<Time, HarnessError> {
        match (self.t, self.big_t) {
            (Some(t), None) => Ok(Time::Ou(t)),
            (None, Some(t)) => Ok(Time::Additive(t)),
            _ => Err(self.missing("t")),
        }
    }

    /// OU time, required by experiments that run the eigenvalue SDE.
    pub fn require_ou_time(&self) -> Result<f64, HarnessError> {
        if self.big_t.is_some() {
            return Err(self.invalid("T", "this experiment integrates the SDE and needs the OU time `t`"));
        }
        self.t.ok_or_else(|| self.missing("t"))
    }

    pub fn profile_name(&self) -> &str {
        self.profile.as_deref().unwrap_or("two_atom")
    }

    /// Scales for size `n`; the two-atom preset centers on the upper atom.
    pub fn scales(&self, n: usize) -> ProfileScales {
        let default_center = if self.profile_name() == "two_atom" { 1.0 } else { 0.0 };
        let mut sc = ProfileScales::for_size(n).with_window(
            self.center.unwrap_or(default_center),
            self.window.unwrap_or(0.5),
        );
        if let Some(ell) = self.ell {
            sc = sc.with_ell(ell);
        }
        sc
    }

    pub fn build_profile(&self, n: usize) -> Result<PotentialProfile, HarnessError> {
        let sc = self.scales(n);
        let built = match self.profile_name() {
            "zero" => PotentialProfile::zero(n, sc),
            "uniform" => PotentialProfile::uniform(n, sc),
            "rough" => PotentialProfile::rough(n, self.rough_scale.unwrap_or(10.0), sc),
            "file" => {
                let rel = self.profile_file.as_deref().unwrap_or_default();
                let path = match &self.base_dir {
                    Some(dir) => dir.join(rel),
                    None => PathBuf::from(rel),
                };
                let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io { path, source })?;
                let p = PotentialProfile::from_text(&text, |len| self.scales(len))
                    .map_err(|e| self.invalid("profile_file", e.to_string()))?;
                if p.len() != n {
                    return Err(self.invalid("profile_file", format!("has {} entries but N = {n}", p.len())));
                }
                Ok(p)
            }
            _ => PotentialProfile::two_atom(n, sc),
        };
        built.map_err(|e| self.invalid("profile", e.to_string()))
    }

    pub fn q_or(&self, default: f64) -> f64 {
        self.q.unwrap_or(default)
    }

    /// `(log N)^p` unless `threshold` is set.
    pub fn polylog_threshold(&self, n: usize) -> f64 {
        self.threshold
            .unwrap_or_else(|| (n as f64).ln().powf(self.polylog_power.unwrap_or(3.0)))
    }

    /// `K`, or `round(N^{omega'/2})` when only `omega_prime` is given.
    pub fn cutoff_or(&self, n: usize, default: usize) -> usize {
        match (self.cutoff, self.omega_prime) {
            (Some(k), _) => k,
            (None, Some(w)) => (n as f64).powf(w / 2.0).round().max(1.0) as usize,
            _ => default,
        }
    }

    /// `omega_prime`, or `2 ln K / ln N`.
    pub fn omega_prime_for(&self, n: usize, k: usize) -> f64 {
        self.omega_prime
            .unwrap_or_else(|| 2.0 * (k as f64).ln() / (n as f64).ln())
    }

    pub fn pair(&self, v: &Option<Vec<f64>>, default: (f64, f64)) -> (f64, f64) {
        v.as_ref().map(|w| (w[0], w[1])).unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_lookup_finds_assignments() {
        let text = "# comment\nN = 10\n  q=0.5\nqq = 1\n";
        assert_eq!(line_of(text, "N"), Some(2));
        assert_eq!(line_of(text, "q"), Some(3));
        assert_eq!(line_of(text, "G"), None);
    }

    #[test]
    fn polylog_default_and_override() {
        let mut cfg = validate_config("N = 100").unwrap();
        assert!((cfg.polylog_threshold(100) - 100f64.ln().powi(3)).abs() < 1e-12);
        cfg.threshold = Some(2.0);
        assert_eq!(cfg.polylog_threshold(100), 2.0);
    }

    #[test]
    fn cutoff_from_omega() {
        let cfg = validate_config("omega_prime = 1.0").unwrap();
        assert_eq!(cfg.cutoff_or(400, 5), 20);
        assert!((cfg.omega_prime_for(400, 20) - 1.0).abs() < 1e-12);
    }
}
