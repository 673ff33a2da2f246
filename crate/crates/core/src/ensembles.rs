//! GOE and deformed-GOE sampling at fixed times, and empirical spectral
//! statistics.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::freeconv::{PotentialProfile, Time};
use crate::linalg::{eigenvalues_symmetric, LinalgError, SymMatrix};
use crate::rng::RngStream;

/// Sorted spectrum of one sampled matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSample {
    pub eigenvalues: Vec<f64>,
    pub time: Time,
    pub stream: RngStream,
    pub profile_id: String,
}

impl EnsembleSample {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// GOE matrix with `E[w_ij^2] = (1 + delta_ij)/N`. Entries are drawn row by
/// row over the upper triangle including the diagonal.
pub fn sample_goe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    let mut w = SymMatrix::zeros(n);
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    for i in 0..n {
        for j in i..n {
            let z: f64 = rng.sample(StandardNormal);
            w.set_sym(i, j, if i == j { diag * z } else { off * z });
        }
    }
    w
}

/// `s diag(V) + sqrt(tau) W` for the given time.
pub fn deformed_matrix<R: Rng + ?Sized>(profile: &PotentialProfile, time: Time, rng: &mut R) -> SymMatrix {
    let n = profile.len();
    let w = sample_goe(n, rng);
    let v = SymMatrix::from_diagonal(profile.entries());
    v.axpby(time.scale(), &w, time.variance().sqrt())
}

/// Eigenvalues of the deformed ensemble at `time`, exact in law.
pub fn sample_deformed(
    profile: &PotentialProfile,
    time: Time,
    stream: RngStream,
) -> Result<EnsembleSample, LinalgError> {
    let mut rng = stream.rng();
    let h = deformed_matrix(profile, time, &mut rng);
    Ok(EnsembleSample {
        eigenvalues: eigenvalues_symmetric(&h)?,
        time,
        stream,
        profile_id: profile.label().to_string(),
    })
}

/// Eigenvalues of `a W + b` for a GOE matrix `W`.
pub fn sample_goe_spectrum(n: usize, a: f64, b: f64, stream: RngStream) -> Result<EnsembleSample, LinalgError> {
    let mut rng = stream.rng();
    let w = sample_goe(n, &mut rng);
    let ev = eigenvalues_symmetric(&w)?;
    Ok(EnsembleSample {
        eigenvalues: ev.into_iter().map(|x| a * x + b).collect(),
        time: Time::Additive(1.0),
        stream,
        profile_id: "goe".into(),
    })
}

/// `count` deformed samples on indices `0..count` of `stream`, in index order.
pub fn sample_deformed_many(
    profile: &PotentialProfile,
    time: Time,
    stream: RngStream,
    count: usize,
) -> Result<Vec<EnsembleSample>, LinalgError> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_deformed(profile, time, stream.index(i)))
        .collect()
}

/// `count` GOE spectra on indices `0..count` of `stream`, in index order.
pub fn sample_goe_many(n: usize, stream: RngStream, count: usize) -> Result<Vec<EnsembleSample>, LinalgError> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_goe_spectrum(n, 1.0, 0.0, stream.index(i)))
        .collect()
}

/// `(1/N) sum 1/(lambda_i - z)`.
pub fn empirical_stieltjes(eigenvalues: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &l in eigenvalues {
        acc += 1.0 / (l - z);
    }
    acc / eigenvalues.len() as f64
}

/// Fraction of eigenvalues `<= e`; `eigenvalues` must be sorted.
pub fn counting_function(eigenvalues: &[f64], e: f64) -> f64 {
    if eigenvalues.is_empty() {
        return 0.0;
    }
    eigenvalues.partition_point(|&l| l <= e) as f64 / eigenvalues.len() as f64
}
