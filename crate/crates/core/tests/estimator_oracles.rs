use fluid_doa::covariance::{build_rr, expected_covariance, rearrange_to_lags, sample_covariance, CovarianceMode, LagVector};
use fluid_doa::estimator::{
    detect_los_count, estimate, mdl_count, root_music, root_polynomial, subspace_split, Detector,
};
use fluid_doa::geometry::{design, DesignKind, GeometryDesign};
use fluid_doa::linalg::{hermitian_eigen, CMatrix};
use fluid_doa::poly;
use fluid_doa::signal::{derive_seed, synthesize, Alignment, Scenario, Target};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn exact_lags(d: &GeometryDesign, angles: &[f64], noise: f64) -> LagVector<f64> {
    let mode = match d.kind {
        DesignKind::Aligned => CovarianceMode::Stacked,
        DesignKind::Misaligned => CovarianceMode::PerMovement,
    };
    let cov = expected_covariance::<f64>(d, angles, &vec![1.0; angles.len()], noise, mode).unwrap();
    rearrange_to_lags(&cov, d).unwrap()
}

/// Sorted angles in `[-lim, lim]` with pairwise gaps of at least `gap`.
fn separated_angles(rng: &mut ChaCha8Rng, k: usize, lim: f64, gap: f64) -> Vec<f64> {
    loop {
        let mut a: Vec<f64> = (0..k).map(|_| rng.random_range(-lim..lim)).collect();
        a.sort_by(f64::total_cmp);
        if a.windows(2).all(|w| w[1] - w[0] >= gap) {
            return a;
        }
    }
}

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
    }
}

#[test]
fn symmetric_pair_with_nine_lags() {
    let d = design(DesignKind::Misaligned, 4, 1).unwrap();
    assert_eq!(d.delta(), 9);
    let est = estimate(&exact_lags(&d, &[-30.0, 30.0], 1.0), Detector::EigenRatio, 0.5, 1.0).unwrap();
    assert_eq!(est.k_hat, 2);
    assert_close(&est.angles_deg, &[-30.0, 30.0], 1e-6);
}

#[test]
fn aligned_three_elements_resolve_eleven_sources() {
    let d = design(DesignKind::Aligned, 3, 1).unwrap();
    let angles: Vec<f64> = (0..11).map(|i| -50.0 + 10.0 * i as f64).collect();
    let est = estimate(&exact_lags(&d, &angles, 0.1), Detector::Fixed(11), 0.5, 1.0).unwrap();
    assert_close(&est.angles_deg, &angles, 1e-6);
    assert!(est.roots.iter().all(|z| z.norm() <= 1.0 + 1e-9));
}

const DESIGNS: [(DesignKind, usize, usize); 4] = [
    (DesignKind::Aligned, 3, 1),
    (DesignKind::Aligned, 4, 1),
    (DesignKind::Misaligned, 4, 1),
    (DesignKind::Misaligned, 5, 2),
];

/// Even spread over `[-70, 70]` with a random offset per angle, keeping
/// every gap at least 2 degrees.
fn jittered_angles(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let cell = 140.0 / k as f64;
    let slack = ((cell - 2.0) / 2.0).clamp(0.0, 2.0);
    (0..k)
        .map(|i| -70.0 + cell * (i as f64 + 0.5) + rng.random_range(-slack..=slack))
        .collect()
}

#[test]
fn exact_pipeline_recovers_up_to_capacity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (kind, m, g) in DESIGNS {
        let d = design(kind, m, g).unwrap();
        for k in 1..=d.delta() {
            for _ in 0..5 {
                let angles = jittered_angles(&mut rng, k);
                let est = estimate(&exact_lags(&d, &angles, 1.0), Detector::Fixed(k), 0.5, 1.0).unwrap();
                assert_close(&est.angles_deg, &angles, 1e-6);
            }
        }
    }
}

#[test]
fn exact_pipeline_recovers_random_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    for (kind, m, g) in DESIGNS {
        let d = design(kind, m, g).unwrap();
        for k in 1..=d.delta() / 2 {
            for _ in 0..5 {
                let angles = separated_angles(&mut rng, k, 70.0, 2.0);
                let est = estimate(&exact_lags(&d, &angles, 1.0), Detector::Fixed(k), 0.5, 1.0).unwrap();
                assert_close(&est.angles_deg, &angles, 1e-6);
            }
        }
    }
}

#[test]
fn roots_come_in_conjugate_reciprocal_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [4usize, 8, 12] {
        for k in 1..n - 1 {
            let h = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let h = h.hermitian_part();
            let u = hermitian_eigen(&h).unwrap().vectors.select_columns(&(k..n).collect::<Vec<_>>());
            let roots = poly::roots(&root_polynomial(&u)).unwrap();
            for z in &roots {
                let partner = z.conj().inv();
                let best = roots.iter().map(|w| (w - partner).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-8 * partner.norm().max(1.0), "n={n} k={k}: {z}");
            }
        }
    }
}

/// Spectral MUSIC peaks on a 0.001 degree grid.
fn grid_music_peaks(noise: &CMatrix<f64>, k: usize) -> Vec<f64> {
    let q = noise.mul_adjoint(noise);
    let n = q.rows();
    let steps = 180_000usize;
    let spectrum: Vec<f64> = (1..steps)
        .map(|i| {
            let th = -90.0 + i as f64 * 0.001;
            let phi = PI * th.to_radians().sin();
            let c: Vec<Complex64> = (0..n).map(|m| Complex64::from_polar(1.0, -(m as f64) * phi)).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n {
                let mut row = Complex64::new(0.0, 0.0);
                for b in 0..n {
                    row += q[(a, b)] * c[b];
                }
                acc += c[a].conj() * row;
            }
            1.0 / acc.re
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (1..spectrum.len() - 1)
        .filter(|&i| spectrum[i] > spectrum[i - 1] && spectrum[i] >= spectrum[i + 1])
        .map(|i| (spectrum[i], -90.0 + (i + 1) as f64 * 0.001))
        .collect();
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<f64> = peaks.iter().take(k).map(|p| p.1).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn grid_music_agrees_with_rooting() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let d = design(DesignKind::Aligned, 3, 1).unwrap();
    for _ in 0..20 {
        let k = rng.random_range(1..=4);
        let angles = separated_angles(&mut rng, k, 75.0, 5.0);
        let rr = build_rr(&exact_lags(&d, &angles, 1.0));
        let split = subspace_split(&rr, k).unwrap();
        let rooted = root_music(&split.noise, k, 0.5, 1.0).unwrap().angles_deg;
        let grid = grid_music_peaks(&split.noise, k);
        assert_close(&rooted, &grid, 0.002);
    }
}

#[test]
fn f32_pipeline_runs() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    let cov = expected_covariance::<f32>(&d, &[-20.0, 15.0], &[1.0, 1.0], 0.5, CovarianceMode::Stacked).unwrap();
    let est = estimate(&rearrange_to_lags(&cov, &d).unwrap(), Detector::EigenRatio, 0.5, 1.0).unwrap();
    assert_eq!(est.k_hat, 2);
    assert!((est.angles_deg[0] + 20.0).abs() < 0.05 && (est.angles_deg[1] - 15.0).abs() < 0.05);
}

#[test]
fn sampled_los_with_nlos_detects_los_count() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    let targets = two_targets_one_nlos_each();
    let mut hits = 0;
    for t in 0..20 {
        let sc = Scenario::new(targets.clone(), 10.0, 1000, Alignment::Aligned, derive_seed(8, t));
        let blocks = synthesize::<f64>(&sc, &d).unwrap();
        let r = rearrange_to_lags(&sample_covariance(&blocks, CovarianceMode::Stacked).unwrap(), &d).unwrap();
        let est = estimate(&r, Detector::EigenRatio, 0.5, 1.0).unwrap();
        if est.k_hat == 2 {
            hits += 1;
            assert_close(&est.angles_deg, &[-30.0, 25.0], 1.5);
        }
    }
    assert!(hits >= 18, "{hits}/20");
}

fn two_targets_one_nlos_each() -> Vec<Target> {
    vec![Target::with_nlos(-30.0, [-5.0]), Target::with_nlos(25.0, [50.0])]
}

/// On the physical stacked covariance the noise eigenvalues follow the
/// Wishart model MDL assumes, and it counts every path.
#[test]
fn mdl_counts_all_paths_on_stacked_covariance() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    let mut votes = [0usize; 9];
    for t in 0..20 {
        let sc = Scenario::new(two_targets_one_nlos_each(), 10.0, 1000, Alignment::Aligned, derive_seed(8, t));
        let blocks = synthesize::<f64>(&sc, &d).unwrap();
        let cov = sample_covariance(&blocks, CovarianceMode::Stacked).unwrap();
        let eig = hermitian_eigen(&cov.matrices[0]).unwrap();
        votes[mdl_count(&eig.values, 1000)] += 1;
    }
    assert!(votes[4] >= 15, "{votes:?}");
}

/// The lag-domain Toeplitz spectrum has a spread, partly negative noise
/// floor, so MDL overcounts there and never returns the LoS count.
#[test]
fn mdl_overcounts_on_lag_matrix() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    for t in 0..10 {
        let sc = Scenario::new(two_targets_one_nlos_each(), 10.0, 1000, Alignment::Aligned, derive_seed(8, t));
        let blocks = synthesize::<f64>(&sc, &d).unwrap();
        let r = rearrange_to_lags(&sample_covariance(&blocks, CovarianceMode::Stacked).unwrap(), &d).unwrap();
        let eig = hermitian_eigen(&build_rr(&r)).unwrap();
        assert!(mdl_count(&eig.values, 1000) >= 4);
    }
}

#[test]
fn mdl_two_exact_sources_with_floor() {
    let mut rho = vec![40.0, 25.0];
    rho.extend(std::iter::repeat_n(1.0, 10));
    assert_eq!(mdl_count(&rho, 100_000), 2);
}

proptest! {
    #[test]
    fn ratio_detector_is_scale_invariant(
        mut rho in prop::collection::vec(1e-3f64..1e3, 2..16),
        c in 1e-6f64..1e6,
    ) {
        rho.sort_by(|a, b| b.total_cmp(a));
        let scaled: Vec<f64> = rho.iter().map(|x| x * c).collect();
        match (detect_los_count(&rho), detect_los_count(&scaled)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
