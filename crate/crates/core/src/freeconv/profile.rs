use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::FreeConvError;

/// Scale parameters attached to an initial profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileScales {
    /// Lower regularity scale `ell`, must satisfy `1/N <= ell < window`.
    pub ell: f64,
    /// Window half-width `G` around `center`.
    pub window: f64,
    /// Window center `E0`.
    pub center: f64,
    /// Entries must satisfy `|V_i| <= N^bound_exponent`.
    pub bound_exponent: f64,
}

impl ProfileScales {
    pub fn for_size(n: usize) -> Self {
        ProfileScales {
            ell: 1.0 / n.max(1) as f64,
            window: 0.5,
            center: 0.0,
            bound_exponent: 1.0,
        }
    }

    pub fn with_window(mut self, center: f64, window: f64) -> Self {
        self.center = center;
        self.window = window;
        self
    }

    pub fn with_ell(mut self, ell: f64) -> Self {
        self.ell = ell;
        self
    }
}

/// Sorted diagonal initial data `V` with its scales.
///
/// Repeated values are grouped into weighted atoms so that Stieltjes sums
/// over atomic profiles cost one term per distinct value.
#[derive(Clone, Debug)]
pub struct PotentialProfile {
    entries: Vec<f64>,
    atoms: Vec<(f64, f64)>,
    scales: ProfileScales,
    label: String,
}

impl PotentialProfile {
    /// Validates and wraps sorted entries.
    pub fn new(entries: Vec<f64>, scales: ProfileScales) -> Result<Self, FreeConvError> {
        Self::labelled(entries, scales, "custom")
    }

    pub fn labelled(
        entries: Vec<f64>,
        scales: ProfileScales,
        label: &str,
    ) -> Result<Self, FreeConvError> {
        let n = entries.len();
        if n == 0 {
            return Err(FreeConvError::EmptyProfile);
        }
        let bound = (n as f64).powf(scales.bound_exponent);
        for (i, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(FreeConvError::NonFiniteEntry { index: i });
            }
            if v.abs() > bound {
                return Err(FreeConvError::BoundExceeded { index: i, value: v, bound });
            }
            if i > 0 && v < entries[i - 1] {
                return Err(FreeConvError::Unsorted { index: i });
            }
        }
        let min_ell = 1.0 / n as f64;
        let ok_ell = scales.ell.is_finite() && scales.ell >= min_ell * (1.0 - 1e-12);
        if !ok_ell {
            return Err(FreeConvError::EllOutOfRange { ell: scales.ell, n });
        }
        if !(scales.window > scales.ell) || !scales.window.is_finite() || !scales.center.is_finite() {
            return Err(FreeConvError::ScaleOrder {
                ell: scales.ell,
                window: scales.window,
            });
        }
        let w = 1.0 / n as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for &v in &entries {
            match atoms.last_mut() {
                Some((last, weight)) if *last == v => *weight += w,
                _ => atoms.push((v, w)),
            }
        }
        Ok(PotentialProfile {
            entries,
            atoms,
            scales,
            label: label.to_string(),
        })
    }

    /// `V_i = -1 + (2i + 1)/N` for `i` in `0..N`, equally spaced on `[-1, 1]`.
    pub fn uniform(n: usize, scales: ProfileScales) -> Result<Self, FreeConvError> {
        let entries = (0..n)
            .map(|i| -1.0 + (2 * i + 1) as f64 / n as f64)
            .collect();
        Self::labelled(entries, scales, "uniform")
    }

    /// Half the entries at `-1`, the rest at `+1`.
    pub fn two_atom(n: usize, scales: ProfileScales) -> Result<Self, FreeConvError> {
        let half = n / 2;
        let entries = (0..n).map(|i| if i < half { -1.0 } else { 1.0 }).collect();
        Self::labelled(entries, scales, "two_atom")
    }

    /// All entries zero, which makes the deformed ensemble a rescaled GOE.
    pub fn zero(n: usize, scales: ProfileScales) -> Result<Self, FreeConvError> {
        Self::labelled(vec![0.0; n], scales, "zero")
    }

    /// Midpoint quantiles of the density proportional to
    /// `1 + sin(2 pi E / ell') / 2` on `[-1, 1]`, with `ell' = ell * rough_scale`.
    pub fn rough(n: usize, rough_scale: f64, scales: ProfileScales) -> Result<Self, FreeConvError> {
        let period = scales.ell * rough_scale;
        if !(period > 0.0) || !period.is_finite() {
            return Err(FreeConvError::InvalidParameter(format!(
                "rough profile needs a positive period, got {period}"
            )));
        }
        let k = 2.0 * PI / period;
        let raw = |e: f64| (e + 1.0) + ((-k).cos() - (k * e).cos()) / (2.0 * k);
        let total = raw(1.0);
        let entries = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64 * total;
                let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
                while hi - lo > 1e-14 {
                    let mid = 0.5 * (lo + hi);
                    if raw(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        Self::labelled(entries, scales, "rough")
    }

    /// Parses one value per line; blank lines and `#` comments are skipped.
    /// Values are sorted before validation.
    pub fn from_text(text: &str, scales_for: impl Fn(usize) -> ProfileScales) -> Result<Self, FreeConvError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| FreeConvError::ProfileParse {
                line: lineno + 1,
                message: format!("expected a number, found `{line}`"),
            })?;
            if !v.is_finite() {
                return Err(FreeConvError::ProfileParse {
                    line: lineno + 1,
                    message: "value is not finite".into(),
                });
            }
            entries.push(v);
        }
        entries.sort_by(f64::total_cmp);
        let scales = scales_for(entries.len());
        Self::labelled(entries, scales, "file")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Distinct values with their weights (multiplicity / N).
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn scales(&self) -> ProfileScales {
        self.scales
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    /// Stieltjes transform `(1/N) sum 1/(V_i - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(v, w) in &self.atoms {
            acc += w / (v - z);
        }
        acc
    }

    /// Fraction of entries within `[e - eta, e + eta]`.
    pub fn fraction_within(&self, e: f64, eta: f64) -> f64 {
        let lo = self.entries.partition_point(|&v| v < e - eta);
        let hi = self.entries.partition_point(|&v| v <= e + eta);
        (hi - lo) as f64 / self.len() as f64
    }
}
