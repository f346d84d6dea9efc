//! Sample covariances, their rearrangement onto consecutive co-array lags,
//! and the Toeplitz matrix rebuilt from the lag vector.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryDesign;
use crate::linalg::CMatrix;
use crate::scalar::{Cplx, Real};
use crate::signal::{steering_vector, Alignment, SnapshotBlock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceMode {
    /// One covariance over the output stacked across all movements.
    Stacked,
    /// One covariance per movement; lags are pooled afterwards.
    PerMovement,
}

impl From<Alignment> for CovarianceMode {
    fn from(a: Alignment) -> Self {
        match a {
            Alignment::Aligned => CovarianceMode::Stacked,
            Alignment::Misaligned => CovarianceMode::PerMovement,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceStack<T: Real> {
    pub mode: CovarianceMode,
    pub matrices: Vec<CMatrix<T>>,
    pub snapshots: usize,
}

fn gram<T: Real>(y: &CMatrix<T>) -> CMatrix<T> {
    let inv_t = T::one() / T::of_usize(y.cols());
    y.mul_adjoint(y).scale_real(inv_t).hermitian_part()
}

/// `(1/T) Y Y^H`, stacked or per movement, Hermitian-symmetrized.
pub fn sample_covariance<T: Real>(
    blocks: &[SnapshotBlock<T>],
    mode: CovarianceMode,
) -> Result<CovarianceStack<T>> {
    let first = blocks.first().ok_or(Error::Empty("snapshot blocks"))?;
    let snapshots = first.snapshots();
    if snapshots == 0 {
        return Err(Error::Empty("snapshot block has no columns"));
    }
    let matrices = match mode {
        CovarianceMode::Stacked => {
            if blocks.iter().any(|b| b.snapshots() != snapshots) {
                return Err(Error::DimensionMismatch(
                    "stacked covariance needs equal snapshot counts".into(),
                ));
            }
            let parts: Vec<&CMatrix<T>> = blocks.iter().map(|b| &b.samples).collect();
            vec![gram(&CMatrix::vstack(&parts))]
        }
        CovarianceMode::PerMovement => blocks
            .iter()
            .map(|b| {
                if b.snapshots() == 0 {
                    Err(Error::Empty("snapshot block has no columns"))
                } else {
                    Ok(gram(&b.samples))
                }
            })
            .collect::<Result<_>>()?,
    };
    Ok(CovarianceStack {
        mode,
        matrices,
        snapshots,
    })
}

/// Infinite-snapshot covariance `A diag(p) A^H + σ² I` for uncorrelated
/// LoS sources, in the layout implied by `mode`.
pub fn expected_covariance<T: Real>(
    design: &GeometryDesign,
    angles_deg: &[f64],
    powers: &[f64],
    noise_var: f64,
    mode: CovarianceMode,
) -> Result<CovarianceStack<T>> {
    if angles_deg.len() != powers.len() {
        return Err(Error::DimensionMismatch("one power per angle required".into()));
    }
    let model = |positions: &[i64]| -> Result<CMatrix<T>> {
        let n = positions.len();
        let mut r = CMatrix::<T>::identity(n).scale_real(T::of(noise_var));
        for (&ang, &p) in angles_deg.iter().zip(powers) {
            let a = steering_vector::<T>(positions, design.spacing, design.wavelength, ang)?;
            let outer = CMatrix::outer(&a, &a).scale_real(T::of(p));
            r = &r + &outer;
        }
        Ok(r.hermitian_part())
    };
    let matrices = match mode {
        CovarianceMode::Stacked => vec![model(&design.stacked_positions())?],
        CovarianceMode::PerMovement => design
            .positions
            .iter()
            .map(|p| model(p))
            .collect::<Result<_>>()?,
    };
    Ok(CovarianceStack {
        mode,
        matrices,
        snapshots: usize::MAX,
    })
}

/// Observation vector over consecutive lags `-Δ..=Δ`; `values[i]` holds lag
/// `i - Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LagVector<T: Real> {
    pub delta: usize,
    pub values: Vec<Cplx<T>>,
}

impl<T: Real> LagVector<T> {
    pub fn lag(&self, lag: i64) -> Cplx<T> {
        self.values[(self.delta as i64 + lag) as usize]
    }

    /// Lag vector sampled from a closure, mostly for oracles.
    pub fn from_fn(delta: usize, f: impl Fn(i64) -> Cplx<T>) -> Self {
        let values = (-(delta as i64)..=delta as i64).map(f).collect();
        Self { delta, values }
    }

    /// One `lag re im` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, z) in self.values.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", i as i64 - self.delta as i64, z.re, z.im));
        }
        out
    }
}

fn check_layout<T: Real>(cov: &CovarianceStack<T>, design: &GeometryDesign) -> Result<Vec<Vec<i64>>> {
    let m = design.antennas();
    let layouts = design.movements + 1;
    let rows: Vec<Vec<i64>> = match cov.mode {
        CovarianceMode::Stacked => vec![design.stacked_positions()],
        CovarianceMode::PerMovement => design.positions.clone(),
    };
    let expected = match cov.mode {
        CovarianceMode::Stacked => (1, m * layouts),
        CovarianceMode::PerMovement => (layouts, m),
    };
    if cov.matrices.len() != expected.0
        || cov.matrices.iter().any(|r| r.shape() != (expected.1, expected.1))
    {
        return Err(Error::DimensionMismatch(format!(
            "{:?} covariance for this design needs {} matrices of size {}",
            cov.mode, expected.0, expected.1
        )));
    }
    Ok(rows)
}

/// Number of covariance entries landing on each lag `-Δ..=Δ`.
pub fn lag_multiplicity(design: &GeometryDesign, mode: CovarianceMode) -> Vec<usize> {
    let delta = design.delta() as i64;
    let mut counts = vec![0usize; 2 * delta as usize + 1];
    let groups: Vec<Vec<i64>> = match mode {
        CovarianceMode::Stacked => vec![design.stacked_positions()],
        CovarianceMode::PerMovement => design.positions.clone(),
    };
    for pos in &groups {
        for &row in pos {
            for &col in pos {
                let lag = col - row;
                if lag.abs() <= delta {
                    counts[(lag + delta) as usize] += 1;
                }
            }
        }
    }
    counts
}

/// Averages every covariance entry onto its co-array lag.
///
/// Entry `(row, col)` carries lag `x_col - x_row`, so a source at `θ`
/// contributes `p exp(j ℓ φ)` at lag `ℓ`. After averaging, conjugate
/// symmetry `r(-ℓ) = conj(r(ℓ))` is imposed.
pub fn rearrange_to_lags<T: Real>(cov: &CovarianceStack<T>, design: &GeometryDesign) -> Result<LagVector<T>> {
    let rows = check_layout(cov, design)?;
    let delta = design.delta() as i64;
    let len = 2 * delta as usize + 1;
    let mut sums = vec![Cplx::<T>::zero(); len];
    let mut counts = vec![0usize; len];
    for (r, pos) in cov.matrices.iter().zip(&rows) {
        for (i, &xi) in pos.iter().enumerate() {
            for (j, &xj) in pos.iter().enumerate() {
                let lag = xj - xi;
                if lag.abs() <= delta {
                    let idx = (lag + delta) as usize;
                    sums[idx] = sums[idx] + r[(i, j)];
                    counts[idx] += 1;
                }
            }
        }
    }
    if let Some(idx) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingLag(idx as i64 - delta));
    }
    let avg: Vec<Cplx<T>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s.unscale(T::of_usize(c)))
        .collect();
    let half = T::of(0.5);
    let values = (0..len)
        .map(|i| (avg[i] + avg[len - 1 - i].conj()).scale(half))
        .collect();
    Ok(LagVector {
        delta: delta as usize,
        values,
    })
}

/// `(Δ+1) x (Δ+1)` matrix whose column `n` is the reversed window of `r`
/// ending at lag `n`, i.e. `R[m, n] = r(n - m)`. Hermitian Toeplitz when `r`
/// is conjugate symmetric.
pub fn build_rr<T: Real>(r: &LagVector<T>) -> CMatrix<T> {
    let n = r.delta + 1;
    CMatrix::from_fn(n, n, |i, j| r.lag(j as i64 - i as i64))
}
