//! LoS path-count detection and polynomial-rooting DOA estimation on the
//! co-array Toeplitz matrix.
//!
//! The detector looks for the first strict peak of the ratio curve
//! `f_k = ρ_k / ρ_{k+1}` of the descending eigenvalues. Strong LoS paths
//! sit well above the weaker NLoS and noise eigenvalues, so the first gap
//! separates the LoS count even when NLoS paths are present. An MDL
//! detector is provided as a baseline; it counts all paths.

use std::cmp::Ordering;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::covariance::{build_rr, LagVector};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianEigen};
use crate::poly;
use crate::scalar::{Cplx, Real};

/// Relative floor applied to eigenvalues before forming ratios or logs.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// How the number of LoS paths is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "detector", content = "value")]
pub enum Detector {
    /// First peak of the eigenvalue ratio curve.
    EigenRatio,
    /// Minimum description length with the given snapshot count.
    Mdl(usize),
    /// Known count.
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult<T: Real> {
    pub k_hat: usize,
    /// Ascending, degrees.
    pub angles_deg: Vec<T>,
    /// Descending spectrum of the Toeplitz matrix.
    pub eigenvalues: Vec<T>,
    /// Selected roots inside the closed unit disk, in the order of `angles_deg`.
    pub roots: Vec<Cplx<T>>,
    pub ratio_curve: Vec<T>,
}

/// Plain-`f64` view of an [`EstimationResult`] for serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub k_hat: usize,
    pub angles_deg: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// `[re, im]` pairs.
    pub roots: Vec<[f64; 2]>,
    pub ratio_curve: Vec<f64>,
}

impl<T: Real> EstimationResult<T> {
    pub fn to_record(&self) -> EstimationRecord {
        let v = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect();
        EstimationRecord {
            k_hat: self.k_hat,
            angles_deg: v(&self.angles_deg),
            eigenvalues: v(&self.eigenvalues),
            roots: self.roots.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect(),
            ratio_curve: v(&self.ratio_curve),
        }
    }
}

fn floored<T: Real>(eigenvalues: &[T]) -> Vec<T> {
    let top = eigenvalues.first().copied().unwrap_or_else(T::zero);
    let floor = top * T::of(EIGEN_FLOOR);
    eigenvalues.iter().map(|&x| x.max(floor)).collect()
}

fn is_flat<T: Real>(eigenvalues: &[T]) -> bool {
    let top = eigenvalues[0];
    let bottom = eigenvalues[eigenvalues.len() - 1];
    top <= T::zero() || top - bottom <= top * T::epsilon() * T::of(1e3)
}

/// `f_k = ρ_k / ρ_{k+1}`, `k = 1..=Δ`, on floored eigenvalues.
pub fn ratio_curve<T: Real>(eigenvalues: &[T]) -> Vec<T> {
    floored(eigenvalues).windows(2).map(|w| w[0] / w[1]).collect()
}

/// Number of LoS paths: position of the first strict local maximum of the
/// ratio curve, falling back to its first global maximum when the curve
/// never decreases.
pub fn detect_los_count<T: Real>(eigenvalues: &[T]) -> Result<usize> {
    if eigenvalues.len() < 2 {
        return Err(Error::DimensionMismatch(
            "need at least two eigenvalues to form a ratio".into(),
        ));
    }
    if is_flat(eigenvalues) {
        return Err(Error::NoDetectableSource);
    }
    let f = ratio_curve(eigenvalues);
    if let Some(k) = f.windows(2).position(|w| w[0] > w[1]) {
        return Ok(k + 1);
    }
    let best = f
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
    Ok(best.0 + 1)
}

/// Minimum-description-length source count over the spectrum of an
/// `N x N` covariance estimated from `snapshots` samples.
///
/// `MDL(k) = -T (N-k) ln(g_k / a_k) + k (2N - k) ln(T) / 2`, where `g_k`
/// and `a_k` are the geometric and arithmetic means of the `N - k`
/// smallest eigenvalues.
pub fn mdl_count<T: Real>(eigenvalues: &[T], snapshots: usize) -> usize {
    let n = eigenvalues.len();
    if n < 2 || is_flat(eigenvalues) {
        return 0;
    }
    let lam: Vec<f64> = floored(eigenvalues).iter().map(|x| x.as_f64()).collect();
    let t = snapshots.max(1) as f64;
    let cost = |k: usize| {
        let tail = &lam[k..];
        let m = tail.len() as f64;
        let log_geo = tail.iter().map(|x| x.ln()).sum::<f64>() / m;
        let arith = tail.iter().sum::<f64>() / m;
        -t * m * (log_geo - arith.ln()) + 0.5 * (k * (2 * n - k)) as f64 * t.ln()
    };
    (0..n)
        .map(|k| (k, cost(k)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
        .map_or(0, |(k, _)| k)
}

/// Signal and interference-plus-noise bases of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SubspaceSplit<T: Real> {
    pub signal: CMatrix<T>,
    pub noise: CMatrix<T>,
    pub eigenvalues: Vec<T>,
}

fn split_eigen<T: Real>(eig: &HermitianEigen<T>, k: usize) -> Result<SubspaceSplit<T>> {
    let n = eig.values.len();
    let delta = n.saturating_sub(1);
    if k > delta {
        return Err(Error::CapacityExceeded { k, delta });
    }
    if k == 0 {
        return Err(Error::NoDetectableSource);
    }
    let sig: Vec<usize> = (0..k).collect();
    let noi: Vec<usize> = (k..n).collect();
    Ok(SubspaceSplit {
        signal: eig.vectors.select_columns(&sig),
        noise: eig.vectors.select_columns(&noi),
        eigenvalues: eig.values.clone(),
    })
}

/// Eigendecomposition split keeping the `k` largest directions as signal.
pub fn subspace_split<T: Real>(rr: &CMatrix<T>, k: usize) -> Result<SubspaceSplit<T>> {
    split_eigen(&hermitian_eigen(rr)?, k)
}

/// Coefficients (ascending powers of `z`, degree `2Δ`) of
/// `z^Δ · p(1/z)^T Q p(z)` with `Q = U U^H` and `p(z) = [1, z, …, z^Δ]`.
/// Coefficient `Δ + k` is the sum of the `k`-th diagonal of `Q`.
pub fn root_polynomial<T: Real>(noise_basis: &CMatrix<T>) -> Vec<Cplx<T>> {
    let n = noise_basis.rows();
    let q = noise_basis.mul_adjoint(noise_basis);
    let delta = n as i64 - 1;
    let mut coeffs = vec![Cplx::<T>::zero(); 2 * n - 1];
    for m in 0..n {
        for col in 0..n {
            let k = col as i64 - m as i64;
            let idx = (k + delta) as usize;
            coeffs[idx] = coeffs[idx] + q[(m, col)];
        }
    }
    coeffs
}

/// Selected roots and their angles.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSelection<T: Real> {
    pub angles_deg: Vec<T>,
    pub roots: Vec<Cplx<T>>,
}

/// Angle whose phase step `2π (d/λ) sin θ` makes `z = exp(-j step)`.
pub fn root_to_angle<T: Real>(z: Cplx<T>, spacing_wavelengths: f64) -> Option<T> {
    let s = -z.arg() / (T::TAU() * T::of(spacing_wavelengths));
    if s.abs() > T::one() {
        None
    } else {
        Some(s.asin().to_degrees())
    }
}

/// Refines a root lying on the unit circle, where the polynomial has a
/// double root that plain rooting only pins down to about `sqrt(eps)`. The
/// derivative has a simple root there, so Newton on it restores full
/// precision. Roots off the circle are left alone.
fn polish_on_circle<T: Real>(slope: &[Cplx<T>], z: Cplx<T>) -> Option<Cplx<T>> {
    let window = T::epsilon().sqrt().sqrt();
    if (T::one() - z.norm()).abs() > window {
        return None;
    }
    let mut w = z;
    for _ in 0..8 {
        let (q, dq) = poly::eval_with_derivative(slope, w);
        if dq.is_zero() {
            break;
        }
        let step = q / dq;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        w = w - step;
        if step.norm() <= T::epsilon() * T::of(4.0) {
            break;
        }
    }
    ((w - z).norm() <= window).then_some(w)
}

/// Polynomial-rooting DOA estimate from an interference-plus-noise basis.
///
/// Roots come in conjugate-reciprocal pairs `(z, 1/z*)` that share one
/// phase. Each root is reflected into the closed unit disk and partners
/// are merged, which also absorbs the split of double roots sitting on
/// the unit circle. The `k` merged roots nearest the circle are kept.
pub fn root_music<T: Real>(
    noise_basis: &CMatrix<T>,
    k: usize,
    spacing: f64,
    wavelength: f64,
) -> Result<RootSelection<T>> {
    let n = noise_basis.rows();
    if k == 0 || k >= n {
        return Err(Error::CapacityExceeded {
            k,
            delta: n.saturating_sub(1),
        });
    }
    let coeffs = root_polynomial(noise_basis);
    let all = poly::roots(&coeffs)?;
    let inside: Vec<Cplx<T>> = all
        .iter()
        .map(|&z| {
            let r = z.norm();
            if r <= T::one() || r.is_zero() {
                z
            } else {
                z.conj().inv()
            }
        })
        .collect();

    let mut candidates: Vec<(T, usize, usize)> = Vec::new();
    for i in 0..inside.len() {
        for j in i + 1..inside.len() {
            candidates.push(((inside[i] - inside[j]).norm(), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut used = vec![false; inside.len()];
    let mut merged = Vec::with_capacity(inside.len() / 2 + 1);
    for (_, i, j) in candidates {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            merged.push((inside[i] + inside[j]).scale(T::of(0.5)));
        }
    }
    merged.extend(inside.iter().zip(&used).filter(|(_, &u)| !u).map(|(&z, _)| z));

    let ratio = spacing / wavelength;
    let mut valid: Vec<(Cplx<T>, T)> = merged
        .into_iter()
        .filter_map(|z| root_to_angle(z, ratio).map(|a| (z, a)))
        .collect();
    if valid.len() < k {
        return Err(Error::NumericalFailure(format!(
            "only {} admissible roots for {k} sources",
            valid.len()
        )));
    }
    valid.sort_by(|a, b| {
        let da = (T::one() - a.0.norm()).abs();
        let db = (T::one() - b.0.norm()).abs();
        da.partial_cmp(&db).unwrap_or(Ordering::Equal)
    });
    valid.truncate(k);
    let slope = poly::derivative(&coeffs);
    for v in valid.iter_mut() {
        if let Some(z) = polish_on_circle(&slope, v.0) {
            if let Some(a) = root_to_angle(z, ratio) {
                *v = (Cplx::from_polar(v.0.norm(), z.arg()), a);
            }
        }
    }
    valid.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
    Ok(RootSelection {
        angles_deg: valid.iter().map(|v| v.1).collect(),
        roots: valid.iter().map(|v| v.0).collect(),
    })
}

/// Full pipeline on a lag vector: Toeplitz rebuild, detection, subspace
/// split and rooting.
pub fn estimate<T: Real>(
    r: &LagVector<T>,
    detector: Detector,
    spacing: f64,
    wavelength: f64,
) -> Result<EstimationResult<T>> {
    let rr = build_rr(r);
    let eig = hermitian_eigen(&rr)?;
    let k_hat = match detector {
        Detector::EigenRatio => detect_los_count(&eig.values)?,
        Detector::Mdl(snapshots) => mdl_count(&eig.values, snapshots),
        Detector::Fixed(k) => k,
    };
    let split = split_eigen(&eig, k_hat)?;
    let sel = root_music(&split.noise, k_hat, spacing, wavelength)?;
    let ratio_curve = if eig.values.len() >= 2 {
        ratio_curve(&eig.values)
    } else {
        Vec::new()
    };
    Ok(EstimationResult {
        k_hat,
        angles_deg: sel.angles_deg,
        eigenvalues: eig.values,
        roots: sel.roots,
        ratio_curve,
    })
}

/// Predicted angle MSE (rad²) from a root MSE:
/// `(λ / (2π d cos θ))² · root_mse / (2 (Δ + 1))`.
pub fn mse_prediction(root_mse: f64, angle_deg: f64, delta: usize, spacing: f64, wavelength: f64) -> Result<f64> {
    if !(angle_deg.abs() < 90.0) {
        return Err(Error::AngleDomain(angle_deg));
    }
    let g = wavelength / (std::f64::consts::TAU * spacing * angle_deg.to_radians().cos());
    Ok(g * g * root_mse / (2.0 * (delta as f64 + 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cis;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn ratio_detector_hand_examples() {
        assert_eq!(detect_los_count(&[10.0, 9.0, 1.0, 1.0, 1.0]).unwrap(), 2);
        assert_eq!(detect_los_count(&[100.0, 1.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(detect_los_count(&[1.0, 1.0, 1.0]).unwrap_err(), Error::NoDetectableSource);
        let f = ratio_curve(&[10.0f64, 9.0, 1.0, 1.0, 1.0]);
        assert!((f[0] - 10.0 / 9.0).abs() < 1e-15 && f[1] == 9.0);
    }

    #[test]
    fn ratio_detector_monotone_curve_uses_argmax() {
        // f = (1.5, 2, 4): never decreases.
        assert_eq!(detect_los_count(&[12.0, 8.0, 4.0, 1.0]).unwrap(), 3);
    }

    #[test]
    fn ratio_detector_floors_zero_eigenvalues() {
        assert_eq!(detect_los_count(&[5.0, 4.0, 0.0, 0.0]).unwrap(), 2);
        assert_eq!(detect_los_count(&[0.0, 0.0]).unwrap_err(), Error::NoDetectableSource);
    }

    #[test]
    fn mdl_examples() {
        assert_eq!(mdl_count(&[1.0; 6], 100), 0);
        assert_eq!(mdl_count(&[50.0, 20.0, 1.0, 1.0, 1.0, 1.0], 1000), 2);
    }

    #[test]
    fn capacity_guard() {
        let rr = CMatrix::<f64>::identity(4);
        assert_eq!(subspace_split(&rr, 4).unwrap_err(), Error::CapacityExceeded { k: 4, delta: 3 });
        let split = subspace_split(&rr, 3).unwrap();
        assert_eq!(split.signal.cols(), 3);
        assert_eq!(split.noise.cols(), 1);
    }

    #[test]
    fn broadside_source_root_is_one() {
        let r = LagVector::from_fn(5, |l| if l == 0 { Complex64::new(1.5, 0.0) } else { Complex64::new(1.0, 0.0) });
        let est = estimate(&r, Detector::Fixed(1), 0.5, 1.0).unwrap();
        assert!((est.roots[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        assert!(est.angles_deg[0].abs() < 1e-6);
    }

    #[test]
    fn two_symmetric_sources_exact() {
        let phis: Vec<f64> = [-30.0f64, 30.0].iter().map(|a| PI * a.to_radians().sin()).collect();
        let r = LagVector::from_fn(9, |l| {
            let mut z = phis.iter().map(|&p| cis(l as f64 * p)).sum::<Complex64>();
            if l == 0 {
                z += 0.1;
            }
            z
        });
        let est = estimate(&r, Detector::EigenRatio, 0.5, 1.0).unwrap();
        assert_eq!(est.k_hat, 2);
        assert!((est.angles_deg[0] + 30.0).abs() < 1e-6);
        assert!((est.angles_deg[1] - 30.0).abs() < 1e-6);
        assert!(est.roots.iter().all(|z| z.norm() <= 1.0 + 1e-9));
    }

    #[test]
    fn polynomial_coefficients_are_conjugate_symmetric() {
        let r = LagVector::from_fn(6, |l| {
            cis(0.3 * l as f64) + cis(-1.1 * l as f64) * 0.5 + if l == 0 { Complex64::new(0.2, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let split = subspace_split(&build_rr(&r), 2).unwrap();
        let c = root_polynomial(&split.noise);
        let n = c.len();
        for k in 0..n {
            assert!((c[k] - c[n - 1 - k].conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn mse_prediction_behaviour() {
        assert_eq!(mse_prediction(0.0, 10.0, 11, 0.5, 1.0).unwrap(), 0.0);
        let a = mse_prediction(1e-3, 10.0, 5, 0.5, 1.0).unwrap();
        let b = mse_prediction(1e-3, 10.0, 11, 0.5, 1.0).unwrap();
        assert!(b < a);
        let r = mse_prediction(1e-3, 60.0, 5, 0.5, 1.0).unwrap() / mse_prediction(1e-3, 0.0, 5, 0.5, 1.0).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert!(mse_prediction(1.0, 90.0, 5, 0.5, 1.0).is_err());
    }

    #[test]
    fn record_serializes() {
        let r = LagVector::from_fn(3, |l| if l == 0 { Complex64::new(2.0, 0.0) } else { cis(0.5 * l as f64) });
        let rec = estimate(&r, Detector::Fixed(1), 0.5, 1.0).unwrap().to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: EstimationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
