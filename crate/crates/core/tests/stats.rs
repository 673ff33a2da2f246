use std::sync::Arc;

use dbmlab_core::ensembles::{counting_function, sample_goe_many, EnsembleSample};
use dbmlab_core::freeconv::{
    semicircle_stieltjes, FreeConvolution, PotentialProfile, ProfileScales, SolverOptions, SpectralPoint, Time,
};
use dbmlab_core::rng::RngStream;
use dbmlab_core::stats::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

fn sample(eigenvalues: Vec<f64>) -> EnsembleSample {
    EnsembleSample {
        eigenvalues,
        time: Time::Ou(0.0),
        stream: RngStream::new(0, 0),
        profile_id: "test".into(),
    }
}

fn uniform_fc(n: usize, t: f64) -> FreeConvolution {
    let p = Arc::new(PotentialProfile::uniform(n, ProfileScales::for_size(n)).unwrap());
    FreeConvolution::compute(p, Time::Ou(t), 2001, &SolverOptions::default()).unwrap()
}

/// Zero profile at a large time: the deformed law is GOE.
fn goe_fc(n: usize) -> FreeConvolution {
    let scales = ProfileScales::for_size(n).with_window(0.0, 1.0);
    let p = Arc::new(PotentialProfile::zero(n, scales).unwrap());
    FreeConvolution::compute(p, Time::Ou(40.0), 2001, &SolverOptions::default()).unwrap()
}

#[test]
fn bulk_sets_nest_and_stay_in_window() {
    let fc = uniform_fc(200, 0.1);
    let sets: Vec<BulkIndexSet> = [0.3, 0.6, 0.9].iter().map(|&q| bulk_index_set(&fc, q)).collect();
    assert!(sets[0].is_subset_of(&sets[1]) && sets[1].is_subset_of(&sets[2]));
    assert!(!sets[0].is_empty());
    let g = fc.classical_locations();
    for (set, q) in sets.iter().zip([0.3, 0.6, 0.9]) {
        for i in set.range() {
            assert!(g[i].abs() < q * 0.5);
        }
        if set.start > 0 {
            assert!(g[set.start - 1] <= -q * 0.5);
        }
        if set.end < g.len() {
            assert!(g[set.end] >= q * 0.5);
        }
    }
    assert!(bulk_index_set(&fc, 0.0).is_empty());
}

#[test]
fn local_law_matches_direct_evaluation() {
    let n = 100;
    let p = PotentialProfile::zero(n, ProfileScales::for_size(n)).unwrap();
    let t = 0.7;
    let time = Time::Ou(t);
    let tau = -(-t).exp_m1();
    let samples = vec![sample(dbmlab_core::freeconv::classical_locations_sc_scaled(n, 0.0, tau.sqrt()))];
    let grid: Vec<SpectralPoint> = [(0.0, 0.1), (0.3, 0.05), (-0.4, 0.2)]
        .iter()
        .map(|&(e, eta)| SpectralPoint::new(e, eta).unwrap())
        .collect();
    let rep = local_law_check(&p, time, &samples, &grid, 10.0, &SolverOptions::default()).unwrap();
    for (pt, got) in grid.iter().zip(&rep.points) {
        let r = tau.sqrt();
        let m_fc = semicircle_stieltjes(pt.z() / r) / r;
        let m_n: Complex64 = samples[0].eigenvalues.iter().map(|&l| 1.0 / (l - pt.z())).sum::<Complex64>() / n as f64;
        let expect = (m_n - m_fc).norm();
        assert!((got.median_abs_error - expect).abs() < 1e-10, "{got:?} vs {expect}");
        assert!((got.max_scaled_error - n as f64 * pt.eta * expect).abs() < 1e-8);
    }
    assert_eq!(rep.pass, rep.sup_scaled_error <= 10.0);
    assert!(rep.eta_slope.is_some());
    assert!(local_law_check(&p, time, &[], &grid, 1.0, &SolverOptions::default()).is_err());
}

#[test]
fn rigidity_of_classical_and_shifted_spectra() {
    let n = 200;
    let fc = uniform_fc(n, 0.1);
    let bulk = bulk_index_set(&fc, 0.5);
    let exact = sample(fc.classical_locations().to_vec());
    let shifted = sample(fc.classical_locations().iter().map(|g| g + 3.0 / n as f64).collect());
    let rep = rigidity_check(&fc, &[exact.clone(), shifted], &bulk, 2.0).unwrap();
    assert_eq!(rep.per_sample_max[0], 0.0);
    assert!((rep.per_sample_max[1] - 3.0).abs() < 1e-9);
    assert!((rep.summary.median - 1.5).abs() < 1e-9);
    assert!(rep.pass);
    assert_eq!(rep.per_index_median.len(), bulk.len());
    let wrong = sample(vec![0.0; n + 1]);
    assert!(matches!(rigidity_check(&fc, &[wrong], &bulk, 1.0), Err(StatsError::SizeMismatch { .. })));
}

#[test]
fn counting_error_agrees_with_dense_scan() {
    let n = 150;
    let fc = uniform_fc(n, 0.2);
    let mut rng = RngStream::new(3, 0).rng();
    let ev: Vec<f64> = fc
        .classical_locations()
        .iter()
        .map(|g| g + rng.random_range(-2.0..2.0) / n as f64)
        .collect::<Vec<_>>();
    let mut ev = ev;
    ev.sort_by(f64::total_cmp);
    let window = (-0.4, 0.5);
    let rep = counting_error(&[sample(ev.clone())], &fc, window, 5.0).unwrap();
    let mut dense = 0.0_f64;
    let steps = 200_000;
    for k in 0..=steps {
        let e = window.0 + (window.1 - window.0) * k as f64 / steps as f64;
        dense = dense.max(n as f64 * (counting_function(&ev, e) - fc.cdf_at(e)).abs());
    }
    let got = rep.per_sample_sup[0];
    assert!(got >= dense - 1e-12 && got <= dense + 0.05, "{got} vs {dense}");

    let classical = sample(fc.classical_locations().to_vec());
    let rep = counting_error(&[classical], &fc, window, 1.0 + 1e-6).unwrap();
    assert!(rep.per_sample_sup[0] <= 1.0 + 1e-6);
    assert!(counting_error(&[sample(ev)], &fc, (1.0, 0.0), 1.0).is_err());
}

/// Spectra whose `N`-rescaled gaps are i.i.d. with inverse CDF `draw`.
fn synthetic(n: usize, count: usize, seed: u64, draw: impl Fn(&mut rand_chacha::ChaCha8Rng) -> f64) -> Vec<EnsembleSample> {
    (0..count as u64)
        .map(|k| {
            let mut rng = RngStream::new(seed, k).rng();
            let mut x = -1.0;
            let ev = (0..n)
                .map(|_| {
                    x += draw(&mut rng) / n as f64;
                    x
                })
                .collect();
            sample(ev)
        })
        .collect()
}

#[test]
fn repulsion_exponents_of_synthetic_gaps() {
    let n = 1000;
    let bulk = BulkIndexSet { q: 1.0, start: 0, end: n };
    let eps = log_grid(0.02, 0.3, 12);
    // Wigner surmise for beta = 1: P[s <= x] = 1 - exp(-pi x^2 / 4).
    let surmise = synthetic(n, 12, 1, |r| {
        let u: f64 = Exp1.sample(r);
        (4.0 * u / std::f64::consts::PI).sqrt()
    });
    let centers: Vec<f64> = (0..20).map(|k| -0.5 + 0.05 * k as f64).collect();
    let rep = level_repulsion_fit(&surmise, &bulk, &eps, &centers, (0.02, 0.3)).unwrap();
    assert!(rep.exponent_within(1.8, 2.2), "{:?}", rep.exponent);
    assert!(rep.gap_cdf.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep.interval_two.windows(2).all(|w| w[0] <= w[1]));
    assert!(rep.gap_observations >= MIN_GAP_OBSERVATIONS);

    let poisson = synthetic(n, 12, 2, |r| Exp1.sample(r));
    let rep = level_repulsion_fit(&poisson, &bulk, &eps, &centers, (0.02, 0.3)).unwrap();
    assert!(rep.exponent_within(0.85, 1.15), "{:?}", rep.exponent);

    let few = synthetic(n, 2, 3, |r| Exp1.sample(r));
    assert!(matches!(
        level_repulsion_fit(&few, &bulk, &eps, &centers, (0.02, 0.3)),
        Err(StatsError::InsufficientSamples { .. })
    ));
}

#[test]
fn ks_detects_shift_and_not_relabelling() {
    let mut rng = RngStream::new(8, 0).rng();
    let a: Vec<f64> = (0..2000).map(|_| Exp1.sample(&mut rng)).collect();
    let b: Vec<f64> = (0..2000).map(|_| Exp1.sample(&mut rng)).collect();
    let c: Vec<f64> = b.iter().map(|x| x + 0.3).collect();
    let opts = BootstrapOptions {
        resamples: 200,
        ..BootstrapOptions::default()
    };
    let band = ks_null_band(&a, &b, &opts);
    // Asymptotic 95% band: 1.36 sqrt(2 / 2000).
    assert!((band - 0.043).abs() < 0.012, "{band}");
    assert!(ks_two_sample(&a, &b) <= 1.5 * band);
    assert!(ks_two_sample(&a, &c) > 3.0 * band);
    let (lo, hi) = ks_bootstrap_interval(&a, &c, &opts);
    assert!(lo <= ks_two_sample(&a, &c) && ks_two_sample(&a, &c) <= hi + 0.02);
}

#[test]
fn gap_universality_between_goe_sets() {
    let n = 80;
    let fc = goe_fc(n);
    let bulk = bulk_index_set(&fc, 0.5);
    let a = sample_goe_many(n, RngStream::new(1, 0).with_domain(1), MIN_GAP_SAMPLES).unwrap();
    let b = sample_goe_many(n, RngStream::new(1, 0).with_domain(2), MIN_GAP_SAMPLES).unwrap();
    let opts = BootstrapOptions {
        resamples: 200,
        ..BootstrapOptions::default()
    };
    let rep = gap_universality_distance(&a, &b, n / 2, n / 2, &fc, &bulk, &opts).unwrap();
    assert!(rep.within_null(1.5), "{} vs {}", rep.ks, rep.null_band);
    assert!((rep.deformed_density - rep.goe_density).abs() < 1e-3);
    assert!(matches!(
        gap_universality_distance(&a[..10], &b, n / 2, n / 2, &fc, &bulk, &opts),
        Err(StatsError::InsufficientSamples { .. })
    ));
    assert!(matches!(
        gap_universality_distance(&a, &b, 0, n / 2, &fc, &bulk, &opts),
        Err(StatsError::IndexOutOfBulk { .. })
    ));
}

#[test]
fn correlation_of_identical_sets_vanishes() {
    let n = 100;
    let set = sample_goe_many(n, RngStream::new(4, 0), 30).unwrap();
    let win = CorrelationWindow {
        center: 0.0,
        half_width: 0.2,
        density: 1.0 / std::f64::consts::PI,
        bulk: (-1.5, 1.5),
    };
    let test = TestFunction::GaussianBump { width: 0.5 };
    for order in [1, 2] {
        let rep = averaged_correlation_compare(&set, &set, &win, &win, test, order, &BootstrapOptions::default())
            .unwrap();
        assert_eq!(rep.difference, 0.0);
        assert!(rep.sigma.is_finite() && rep.sigma > 0.0);
        assert!(rep.within_sigmas(1e-9));
    }
    // One-point value: sum of bump masses over the window, about the
    // bump integral sqrt(2 pi) w per unit rescaled density.
    let rep = averaged_correlation_compare(&set, &set, &win, &win, test, 1, &BootstrapOptions::default()).unwrap();
    let expect = (2.0 * std::f64::consts::PI).sqrt() * 0.5;
    assert!((rep.deformed_value - expect).abs() < 0.1, "{}", rep.deformed_value);
    assert!(averaged_correlation_compare(&set, &set, &win, &win, test, 3, &BootstrapOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_is_a_bounded_symmetric_statistic(
        a in proptest::collection::vec(-5.0f64..5.0, 1..60),
        b in proptest::collection::vec(-5.0f64..5.0, 1..60),
    ) {
        let d = ks_two_sample(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_two_sample(&b, &a));
        prop_assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn ks_ignores_order(mut a in proptest::collection::vec(-5.0f64..5.0, 1..60), b in proptest::collection::vec(-5.0f64..5.0, 1..60)) {
        let d = ks_two_sample(&a, &b);
        a.reverse();
        prop_assert_eq!(d, ks_two_sample(&a, &b));
    }

    #[test]
    fn summary_quartiles_are_ordered(v in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
        let s = Summary::of(&v).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
    }
}
