//! Cramér–Rao bound for the LoS angles with the source powers as nuisance
//! parameters and a known isotropic noise level.
//!
//! The Gaussian Fisher information is `F_ab = T tr(R⁻¹ ∂_a R R⁻¹ ∂_b R)`.
//! Writing `g_a = vec(R^{-1/2} ∂_a R R^{-1/2})` turns it into the Gram
//! matrix `T Re(G^H G)` without ever forming the `n² x n²` weighting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryDesign;
use crate::linalg::{hermitian_eigen, hermitian_inv_sqrt, CMatrix, Lu, Matrix};
use crate::scalar::{Cplx, Real};
use crate::signal::steering_vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrbInput {
    /// Array whose stacked layouts form the manifold.
    pub design: GeometryDesign,
    pub angles_deg: Vec<f64>,
    pub powers: Vec<f64>,
    pub noise_var: f64,
    pub snapshots: usize,
}

impl CrbInput {
    pub fn new(design: GeometryDesign, angles_deg: Vec<f64>, powers: Vec<f64>, noise_var: f64, snapshots: usize) -> Self {
        CrbInput {
            design,
            angles_deg,
            powers,
            noise_var,
            snapshots,
        }
    }

    /// Equal unit powers for every angle.
    pub fn unit_powers(design: GeometryDesign, angles_deg: Vec<f64>, noise_var: f64, snapshots: usize) -> Self {
        let powers = vec![1.0; angles_deg.len()];
        Self::new(design, angles_deg, powers, noise_var, snapshots)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles_deg.len() != self.powers.len() {
            return Err(Error::DimensionMismatch("one power per angle required".into()));
        }
        if self.powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidScenario("source powers must be positive".into()));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::InvalidScenario("noise variance must be positive".into()));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidScenario("snapshot count must be positive".into()));
        }
        if let Some(&a) = self.angles_deg.iter().find(|a| !(a.abs() < 90.0)) {
            return Err(Error::AngleDomain(a));
        }
        Ok(())
    }

    fn check_identifiable(&self) -> Result<()> {
        let k = self.angles_deg.len();
        let delta = self.design.delta();
        if k == 0 {
            return Err(Error::Empty("angles"));
        }
        if 2 * k > 2 * delta + 1 {
            return Err(Error::BoundUndefined(format!(
                "{k} sources exceed the {} lag unknowns of Δ = {delta}",
                2 * delta + 1
            )));
        }
        Ok(())
    }
}

fn steering_and_derivative<T: Real>(
    design: &GeometryDesign,
    positions: &[i64],
    angle_deg: f64,
) -> Result<(Vec<Cplx<T>>, Vec<Cplx<T>>)> {
    let a = steering_vector::<T>(positions, design.spacing, design.wavelength, angle_deg)?;
    // d/dθ exp(-j x 2π sinθ / λ) = -j (2π/λ) cosθ x · a
    let k = T::TAU() / T::of(design.wavelength) * T::of(angle_deg.to_radians().cos());
    let da = positions
        .iter()
        .zip(&a)
        .map(|(&p, &ai)| {
            let x = T::of_i64(p) * T::of(design.spacing);
            ai * Cplx::new(T::zero(), -k * x)
        })
        .collect();
    Ok((a, da))
}

/// `A diag(p) A^H + σ² I` over the stacked manifold.
pub fn model_covariance<T: Real>(input: &CrbInput) -> Result<CMatrix<T>> {
    input.validate()?;
    let pos = input.design.stacked_positions();
    let mut r = CMatrix::<T>::identity(pos.len()).scale_real(T::of(input.noise_var));
    for (&ang, &p) in input.angles_deg.iter().zip(&input.powers) {
        let a = steering_vector::<T>(&pos, input.design.spacing, input.design.wavelength, ang)?;
        r = &r + &CMatrix::outer(&a, &a).scale_real(T::of(p));
    }
    Ok(r.hermitian_part())
}

/// `∂R/∂θ_k` (per radian) and `∂R/∂p_k`.
pub fn covariance_derivatives<T: Real>(input: &CrbInput) -> Result<(Vec<CMatrix<T>>, Vec<CMatrix<T>>)> {
    input.validate()?;
    let pos = input.design.stacked_positions();
    let mut d_theta = Vec::with_capacity(input.angles_deg.len());
    let mut d_power = Vec::with_capacity(input.angles_deg.len());
    for (&ang, &p) in input.angles_deg.iter().zip(&input.powers) {
        let (a, da) = steering_and_derivative::<T>(&input.design, &pos, ang)?;
        let sym = &CMatrix::outer(&da, &a) + &CMatrix::outer(&a, &da);
        d_theta.push(sym.scale_real(T::of(p)));
        d_power.push(CMatrix::outer(&a, &a));
    }
    Ok((d_theta, d_power))
}

struct Whitened<T: Real> {
    g_theta: CMatrix<T>,
    g_power: CMatrix<T>,
}

fn whitened<T: Real>(input: &CrbInput) -> Result<Whitened<T>> {
    let r = model_covariance::<T>(input)?;
    let w = hermitian_inv_sqrt(&r)?;
    let (d_theta, d_power) = covariance_derivatives::<T>(input)?;
    let columns = |ds: &[CMatrix<T>]| {
        let n2 = r.rows() * r.cols();
        let cols: Vec<Vec<Cplx<T>>> = ds.iter().map(|d| w.matmul(d).matmul(&w).vec()).collect();
        CMatrix::from_fn(n2, cols.len(), |i, j| cols[j][i])
    };
    Ok(Whitened {
        g_theta: columns(&d_theta),
        g_power: columns(&d_power),
    })
}

fn gram<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Matrix<T> {
    a.adjoint_mul(b).real_part()
}

/// Fisher information over `[θ (rad); p]`, of size `2K x 2K`.
pub fn fim<T: Real>(input: &CrbInput) -> Result<Matrix<T>> {
    let wh = whitened::<T>(input)?;
    let k = input.angles_deg.len();
    let t = T::of_usize(input.snapshots);
    let g = CMatrix::from_fn(wh.g_theta.rows(), 2 * k, |i, j| {
        if j < k {
            wh.g_theta[(i, j)]
        } else {
            wh.g_power[(i, j - k)]
        }
    });
    Ok(gram(&g, &g).scale(t))
}

fn real_inverse<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let n = m.rows();
    Ok(Lu::new(&m.to_complex())?.solve(&CMatrix::identity(n)).real_part())
}

/// Smallest-to-largest eigenvalue ratio of a symmetric real matrix.
fn conditioning<T: Real>(m: &Matrix<T>) -> Result<T> {
    let eig = hermitian_eigen(&m.to_complex().hermitian_part())?;
    let top = eig.values[0];
    let bottom = eig.values[eig.values.len() - 1];
    Ok(if top <= T::zero() { T::zero() } else { bottom / top })
}

/// Bound on the angle covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct Crb<T: Real> {
    /// `K x K`, radians².
    pub matrix: Matrix<T>,
}

impl<T: Real> Crb<T> {
    pub fn diagonal_rad2(&self) -> Vec<T> {
        (0..self.matrix.rows()).map(|i| self.matrix[(i, i)]).collect()
    }

    pub fn diagonal_deg2(&self) -> Vec<T> {
        let c = T::of(180.0) / T::PI();
        self.diagonal_rad2().into_iter().map(|v| v * c * c).collect()
    }
}

/// `(1/T) (G_θ^H P⊥ G_θ)^{-1}` with `P⊥` the projector orthogonal to the
/// whitened power derivatives.
pub fn crb_theta<T: Real>(input: &CrbInput) -> Result<Crb<T>> {
    input.validate()?;
    input.check_identifiable()?;
    let wh = whitened::<T>(input)?;
    let rank_tol = T::epsilon() * T::of(1e3);

    let pp = gram(&wh.g_power, &wh.g_power);
    if conditioning(&pp)? <= rank_tol {
        return Err(Error::BoundUndefined("power derivatives are linearly dependent".into()));
    }
    let tt = gram(&wh.g_theta, &wh.g_theta);
    let tp = gram(&wh.g_theta, &wh.g_power);
    let correction = tp.matmul(&real_inverse(&pp)?).matmul(&tp.transpose());
    let schur = &tt - &correction;
    let schur = Matrix::from_fn(schur.rows(), schur.cols(), |i, j| {
        (schur[(i, j)] + schur[(j, i)]) * T::of(0.5)
    });
    if conditioning(&schur)? <= rank_tol {
        return Err(Error::BoundUndefined("projected angle information is rank deficient".into()));
    }
    let inv = real_inverse(&schur)?;
    Ok(Crb {
        matrix: inv.scale(T::one() / T::of_usize(input.snapshots)),
    })
}

/// `sqrt` of the mean diagonal bound, in degrees. This is the RMSE floor
/// for an estimator averaged over all sources.
pub fn crb_rmse_deg<T: Real>(input: &CrbInput) -> Result<T> {
    let d = crb_theta::<T>(input)?.diagonal_deg2();
    let n = T::of_usize(d.len());
    Ok((d.into_iter().fold(T::zero(), |a, b| a + b) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::design_aligned;
    use crate::linalg::inverse;

    fn input(angles: &[f64]) -> CrbInput {
        CrbInput::unit_powers(design_aligned(3, 1).unwrap(), angles.to_vec(), 1.0, 500)
    }

    #[test]
    fn covariance_trace_and_noise_only() {
        let inp = CrbInput::new(design_aligned(3, 1).unwrap(), vec![10.0, -20.0], vec![1.0, 2.5], 0.3, 10);
        let r = model_covariance::<f64>(&inp).unwrap();
        let m = 3.0 * 2.0;
        assert!((r.trace().re - (3.5 * m + 0.3 * m)).abs() < 1e-12);
        let empty = CrbInput::new(design_aligned(3, 1).unwrap(), vec![], vec![], 0.7, 10);
        let r0 = model_covariance::<f64>(&empty).unwrap();
        assert!((&r0 - &CMatrix::identity(6).scale_real(0.7)).max_abs() < 1e-15);
    }

    #[test]
    fn trace_formula_oracle() {
        let inp = input(&[-12.0, 25.0]);
        let f = fim::<f64>(&inp).unwrap();
        let r = model_covariance::<f64>(&inp).unwrap();
        let ri = inverse(&r).unwrap();
        let (dt, dp) = covariance_derivatives::<f64>(&inp).unwrap();
        let ds: Vec<_> = dt.iter().chain(&dp).collect();
        for a in 0..4 {
            for b in 0..4 {
                let tr = ri.matmul(ds[a]).matmul(&ri).matmul(ds[b]).trace();
                let want = 500.0 * tr.re;
                assert!((f[(a, b)] - want).abs() <= 1e-9 * want.abs().max(1.0), "{a},{b}");
            }
        }
    }

    #[test]
    fn single_source_matches_fim_inverse_block() {
        let inp = input(&[0.0]);
        let f = fim::<f64>(&inp).unwrap();
        let finv = real_inverse(&f).unwrap();
        let c = crb_theta::<f64>(&inp).unwrap();
        let rel = (c.matrix[(0, 0)] - finv[(0, 0)]).abs() / finv[(0, 0)];
        assert!(c.matrix[(0, 0)] > 0.0);
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn doubling_snapshots_halves_bound() {
        let mut inp = input(&[-30.0, 10.0]);
        let a = crb_theta::<f64>(&inp).unwrap().diagonal_deg2();
        inp.snapshots *= 2;
        let b = crb_theta::<f64>(&inp).unwrap().diagonal_deg2();
        for (x, y) in a.iter().zip(&b) {
            assert!((x / y - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_many_sources_is_undefined() {
        let d = design_aligned(3, 1).unwrap();
        let delta = d.delta();
        let angles: Vec<f64> = (0..=delta).map(|i| -60.0 + 120.0 * i as f64 / delta as f64).collect();
        let inp = CrbInput::unit_powers(d, angles, 1.0, 100);
        assert!(matches!(crb_theta::<f64>(&inp), Err(Error::BoundUndefined(_))));
    }

    #[test]
    fn invalid_inputs() {
        let mut inp = input(&[0.0]);
        inp.noise_var = 0.0;
        assert!(crb_theta::<f64>(&inp).is_err());
        let mut inp = input(&[0.0]);
        inp.powers = vec![-1.0];
        assert!(fim::<f64>(&inp).is_err());
        assert!(crb_theta::<f64>(&input(&[95.0])).is_err());
    }
}
