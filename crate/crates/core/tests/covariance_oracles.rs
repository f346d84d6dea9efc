use fluid_doa::covariance::{
    build_rr, expected_covariance, lag_multiplicity, rearrange_to_lags, sample_covariance, CovarianceMode,
};
use fluid_doa::geometry::{design, DesignKind};
use fluid_doa::linalg::hermitian_eigen;
use fluid_doa::signal::{derive_seed, synthesize, Alignment, Scenario, Target};
use num_complex::Complex64;
use std::f64::consts::PI;

fn analytic_lag(angles: &[f64], powers: &[f64], noise: f64, lag: i64) -> Complex64 {
    let mut r: Complex64 = angles
        .iter()
        .zip(powers)
        .map(|(a, p)| Complex64::from_polar(*p, lag as f64 * PI * a.to_radians().sin()))
        .sum();
    if lag == 0 {
        r += noise;
    }
    r
}

fn spread(k: usize) -> Vec<f64> {
    (0..k).map(|i| -70.0 + 140.0 * (i as f64 + 0.5) / k as f64).collect()
}

#[test]
fn exact_covariance_reproduces_analytic_lags() {
    for (kind, mode) in [
        (DesignKind::Aligned, CovarianceMode::Stacked),
        (DesignKind::Misaligned, CovarianceMode::PerMovement),
    ] {
        for (m, g) in [(3, 1), (4, 1), (5, 2)] {
            let d = design(kind, m, g).unwrap();
            for k in [1, d.delta() / 2, d.delta()] {
                let angles = spread(k);
                let powers: Vec<f64> = (0..k).map(|i| 0.5 + 0.25 * i as f64).collect();
                let cov = expected_covariance::<f64>(&d, &angles, &powers, 0.7, mode).unwrap();
                let r = rearrange_to_lags(&cov, &d).unwrap();
                let delta = d.delta() as i64;
                for l in -delta..=delta {
                    let want = analytic_lag(&angles, &powers, 0.7, l);
                    assert!((r.lag(l) - want).norm() < 1e-10, "{kind} M={m} G={g} K={k} lag {l}");
                }
            }
        }
    }
}

#[test]
fn rr_has_exactly_k_eigenvalues_above_noise() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    let noise = 0.5;
    for k in 1..=d.delta() {
        let angles = spread(k);
        let cov = expected_covariance::<f64>(&d, &angles, &vec![1.0; k], noise, CovarianceMode::Stacked).unwrap();
        let eig = hermitian_eigen(&build_rr(&rearrange_to_lags(&cov, &d).unwrap())).unwrap();
        let above = eig.values.iter().filter(|&&v| v > noise + 1e-8).count();
        assert_eq!(above, k);
        for v in &eig.values[k..] {
            assert!((v - noise).abs() < 1e-8);
        }
    }
}

#[test]
fn aligned_every_lag_is_covered() {
    let d = design(DesignKind::Aligned, 3, 1).unwrap();
    let mult = lag_multiplicity(&d, CovarianceMode::Stacked);
    assert_eq!(mult.len(), 23);
    assert!(mult.iter().all(|&c| c >= 1));
}

#[test]
fn noise_only_sample_covariance_approaches_identity() {
    let d = design(DesignKind::Aligned, 3, 1).unwrap();
    let sc = Scenario::new(vec![], 3.0, 100_000, Alignment::Aligned, 11);
    let blocks = synthesize::<f64>(&sc, &d).unwrap();
    let cov = sample_covariance(&blocks, CovarianceMode::Stacked).unwrap();
    let r = &cov.matrices[0];
    assert_eq!(r.shape(), (6, 6));
    let target = fluid_doa::CMatrix64::identity(6).scale_real(sc.noise_variance());
    let rel = (r - &target).frobenius_norm() / target.frobenius_norm();
    assert!(rel < 0.02, "{rel}");
}

#[test]
fn more_contributions_give_lower_lag_variance() {
    let d = design(DesignKind::Aligned, 4, 1).unwrap();
    let mult = lag_multiplicity(&d, CovarianceMode::Stacked);
    let delta = d.delta() as i64;
    let lo = (1..=delta).min_by_key(|&l| mult[(l + delta) as usize]).unwrap();
    let hi = (1..=delta).max_by_key(|&l| mult[(l + delta) as usize]).unwrap();
    assert!(mult[(hi + delta) as usize] > mult[(lo + delta) as usize]);

    let trials = 400;
    let (mut v_lo, mut v_hi) = (0.0, 0.0);
    for t in 0..trials {
        let sc = Scenario::new(vec![], 0.0, 50, Alignment::Aligned, derive_seed(5, t));
        let blocks = synthesize::<f64>(&sc, &d).unwrap();
        let r = rearrange_to_lags(&sample_covariance(&blocks, CovarianceMode::Stacked).unwrap(), &d).unwrap();
        v_lo += r.lag(lo).norm_sqr();
        v_hi += r.lag(hi).norm_sqr();
    }
    assert!(v_hi / trials as f64 <= v_lo / trials as f64);
}

#[test]
fn misaligned_sample_lags_track_truth() {
    let d = design(DesignKind::Misaligned, 4, 1).unwrap();
    let mut sc = Scenario::new(vec![Target::los(-20.0), Target::los(35.0)], 10.0, 20_000, Alignment::Misaligned, 3);
    sc.nlos_attenuation_db = 10.0;
    let blocks = synthesize::<f64>(&sc, &d).unwrap();
    let r = rearrange_to_lags(&sample_covariance(&blocks, CovarianceMode::PerMovement).unwrap(), &d).unwrap();
    let delta = d.delta() as i64;
    for l in -delta..=delta {
        let want = analytic_lag(&[-20.0, 35.0], &[1.0, 1.0], sc.noise_variance(), l);
        assert!((r.lag(l) - want).norm() < 0.08, "lag {l}: {} vs {want}", r.lag(l));
    }
}
