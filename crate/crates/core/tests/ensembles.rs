use std::sync::Arc;

use dbmlab_core::ensembles::*;
use dbmlab_core::freeconv::{FreeConvolution, PotentialProfile, ProfileScales, SolverOptions, Time};
use dbmlab_core::linalg::{eigenvalues_symmetric, LinalgError, SymMatrix};
use dbmlab_core::rng::RngStream;
use dbmlab_core::stats::ks_two_sample;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
    let mut rng = RngStream::new(seed, 0).with_domain(77).rng();
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            a.set_sym(i, j, rng.sample::<f64, _>(StandardNormal));
        }
    }
    a
}

fn nalgebra_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.n();
    let m = nalgebra::DMatrix::from_row_slice(n, n, a.data());
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Trigonometric form of Cardano for a real symmetric 3x3 matrix.
fn cardano(a: &SymMatrix) -> [f64; 3] {
    let (a11, a22, a33) = (a.get(0, 0), a.get(1, 1), a.get(2, 2));
    let (a12, a13, a23) = (a.get(0, 1), a.get(0, 2), a.get(1, 2));
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = |x: f64| x / p;
    let (b11, b22, b33, b12, b13, b23) = (b(a11 - q), b(a22 - q), b(a33 - q), b(a12), b(a13), b(a23));
    let det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) + b13 * (b12 * b23 - b22 * b13);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut v = [e1, e2, e3];
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn small_examples() {
    let d = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
    assert_eq!(eigenvalues_symmetric(&d).unwrap(), vec![1.0, 2.0, 3.0]);
    let s = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let ev = eigenvalues_symmetric(&s).unwrap();
    assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
}

#[test]
fn rejects_asymmetric_input() {
    let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.1, 0.0]).unwrap();
    assert!(matches!(eigenvalues_symmetric(&a), Err(LinalgError::NotSymmetric { .. })));
}

#[test]
fn agrees_with_nalgebra() {
    for (n, seed) in [(5, 1), (30, 2), (120, 3)] {
        let a = random_symmetric(n, seed);
        let ours = eigenvalues_symmetric(&a).unwrap();
        let theirs = nalgebra_eigenvalues(&a);
        let norm2 = theirs[0].abs().max(theirs[n - 1].abs());
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() <= 1e-10 * norm2, "n={n}: {x} vs {y}");
        }
    }
}

#[test]
fn agrees_with_cardano() {
    for seed in 0..50 {
        let a = random_symmetric(3, seed);
        let ours = eigenvalues_symmetric(&a).unwrap();
        let exact = cardano(&a);
        for (x, y) in ours.iter().zip(&exact) {
            assert!((x - y).abs() <= 1e-12 * a.frobenius_norm().max(1.0), "{ours:?} vs {exact:?}");
        }
    }
}

#[test]
fn trace_and_frobenius_identities() {
    let a = random_symmetric(20, 9);
    let ev = eigenvalues_symmetric(&a).unwrap();
    let sum: f64 = ev.iter().sum();
    let sq: f64 = ev.iter().map(|x| x * x).sum();
    assert!((sum - a.trace()).abs() <= 1e-10 * a.trace().abs().max(1.0));
    assert!((sq - a.frobenius_norm().powi(2)).abs() <= 1e-10 * sq);
}

#[test]
fn goe_entry_variances() {
    let s = RngStream::new(5, 0);
    let draws = 100_000;
    let mean: f64 = (0..draws)
        .map(|k| {
            let w = sample_goe(10, &mut s.index(k).rng());
            w.get(0, 1).powi(2)
        })
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 0.1).abs() < 0.003, "{mean}");

    let var: f64 = (0..20_000)
        .map(|k| sample_goe(1, &mut s.with_domain(1).index(k).rng()).get(0, 0).powi(2))
        .sum::<f64>()
        / 20_000.0;
    assert!((var - 2.0).abs() < 0.1, "{var}");
}

#[test]
fn goe_is_reproducible() {
    let s = RngStream::new(42, 3);
    assert_eq!(sample_goe(8, &mut s.rng()).data(), sample_goe(8, &mut s.rng()).data());
    let a = sample_goe_many(20, RngStream::new(1, 0), 6).unwrap();
    let b = sample_goe_many(20, RngStream::new(1, 0), 6).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trace_mean_follows_scale() {
    let n = 30;
    let entries: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let p = PotentialProfile::new(entries, ProfileScales::for_size(n)).unwrap();
    let t = 0.3;
    let samples = sample_deformed_many(&p, Time::Ou(t), RngStream::new(8, 0), 1000).unwrap();
    let sums: Vec<f64> = samples.iter().map(|s| s.eigenvalues.iter().sum()).collect();
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    let var = sums.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (sums.len() - 1) as f64;
    let expected = (-t / 2.0_f64).exp() * p.entries().iter().sum::<f64>();
    assert!((mean - expected).abs() <= 4.0 * (var / sums.len() as f64).sqrt(), "{mean} vs {expected}");
}

#[test]
fn deformed_histogram_matches_density() {
    let n = 500;
    let p = Arc::new(PotentialProfile::two_atom(n, ProfileScales::for_size(n)).unwrap());
    let time = Time::Ou(0.05);
    let fc = FreeConvolution::compute(p.clone(), time, 2001, &SolverOptions::default()).unwrap();
    let count = 40;
    let samples = sample_deformed_many(&p, time, RngStream::new(3, 0), count).unwrap();
    let width = 0.05;
    let (lo, hi) = (-2.0, 2.0);
    let bins = ((hi - lo) / width) as usize;
    let mut hist = vec![0usize; bins];
    for s in &samples {
        for &l in &s.eigenvalues {
            if l >= lo && l < hi {
                hist[((l - lo) / width) as usize] += 1;
            }
        }
    }
    let mut worst = 0.0_f64;
    for (b, &h) in hist.iter().enumerate() {
        let (a, c) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
        let expected = (fc.cdf_at(c) - fc.cdf_at(a)) / width;
        let got = h as f64 / (count * n) as f64 / width;
        worst = worst.max((got - expected).abs());
    }
    assert!(worst <= 0.1, "sup binned difference {worst}");
}

#[test]
fn large_time_reduces_to_goe() {
    let n = 200;
    let p = PotentialProfile::uniform(n, ProfileScales::for_size(n)).unwrap();
    let time = Time::Ou(40.0);
    assert!(time.scale() <= 1e-8);
    let deformed = sample_deformed_many(&p, time, RngStream::new(4, 0).with_domain(1), 500).unwrap();
    let goe = sample_goe_many(n, RngStream::new(4, 0).with_domain(2), 500).unwrap();
    let gaps = |set: &[EnsembleSample]| -> Vec<f64> {
        set.iter()
            .flat_map(|s| s.eigenvalues[50..150].windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>())
            .collect()
    };
    let ks = ks_two_sample(&gaps(&deformed), &gaps(&goe));
    assert!(ks <= 0.02, "KS {ks}");
}

#[test]
fn stieltjes_and_counting_examples() {
    let ev = [-1.3, -0.2, 0.1, 0.75, 2.0];
    let z = Complex64::new(0.05, 0.3);
    let direct: Complex64 = ev.iter().map(|&l| 1.0 / (l - z)).sum::<Complex64>() / 5.0;
    assert!((empirical_stieltjes(&ev, z) - direct).norm() < 1e-14);
    let sorted = [-1.0, -0.5, 0.5, 1.0];
    assert_eq!(counting_function(&sorted, -0.5), 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_sorted_with_trace(n in 1usize..25, seed in 0u64..10_000) {
        let a = random_symmetric(n, seed);
        let ev = eigenvalues_symmetric(&a).unwrap();
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = ev.iter().sum();
        prop_assert!((sum - a.trace()).abs() <= 1e-10 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn stieltjes_is_herglotz(
        ev in proptest::collection::vec(-3.0f64..3.0, 1..40),
        e in -4.0f64..4.0,
        eta in 1e-4f64..10.0,
    ) {
        let m = empirical_stieltjes(&ev, Complex64::new(e, eta));
        prop_assert!(m.im > 0.0);
        prop_assert!(m.norm() <= 1.0 / eta * (1.0 + 1e-12));
    }

    #[test]
    fn counting_is_monotone_step(
        mut ev in proptest::collection::vec(-3.0f64..3.0, 1..40),
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        ev.sort_by(f64::total_cmp);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(counting_function(&ev, lo) <= counting_function(&ev, hi));
        prop_assert_eq!(counting_function(&ev, -5.0), 0.0);
        prop_assert_eq!(counting_function(&ev, 5.0), 1.0);
    }
}
