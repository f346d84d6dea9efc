//! Complex polynomial root finding (Aberth–Ehrlich simultaneous iteration).

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cis, Cplx, Real};

const MAX_ITERATIONS: usize = 800;

/// Evaluates `sum_k coeffs[k] z^k` and its derivative by Horner's rule.
pub fn eval_with_derivative<T: Real>(coeffs: &[Cplx<T>], z: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
    let mut p = Cplx::zero();
    let mut dp = Cplx::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn eval<T: Real>(coeffs: &[Cplx<T>], z: Cplx<T>) -> Cplx<T> {
    coeffs.iter().rev().fold(Cplx::zero(), |acc, &c| acc * z + c)
}

/// Coefficients of the derivative polynomial.
pub fn derivative<T: Real>(coeffs: &[Cplx<T>]) -> Vec<Cplx<T>> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c.scale(T::of_usize(k)))
        .collect()
}

/// All roots of `sum_k coeffs[k] z^k` (ascending powers).
///
/// Leading coefficients that vanish relative to the largest coefficient are
/// dropped, so the returned count can be below `coeffs.len() - 1`. Exact
/// zero trailing coefficients produce roots at the origin. The iteration
/// itself always runs in `f64`.
pub fn roots<T: Real>(coeffs: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if scale.is_zero() {
        return Err(Error::NumericalFailure("zero polynomial has no isolated roots".into()));
    }
    let negligible = scale * T::epsilon() * T::of(16.0);
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() <= negligible {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].is_zero() {
        lo += 1;
    }
    let mut out = vec![Cplx::zero(); lo];
    let poly: Vec<Cplx<T>> = coeffs[lo..hi].iter().map(|c| c.unscale(scale)).collect();
    if poly.len() <= 1 {
        return Ok(out);
    }
    let wide: Vec<Cplx<f64>> = poly.iter().map(|c| Cplx::new(c.re.as_f64(), c.im.as_f64())).collect();
    out.extend(aberth(&wide)?.into_iter().map(|z| Cplx::new(T::of(z.re), T::of(z.im))));
    Ok(out)
}

fn aberth<T: Real>(poly: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
    let n = poly.len() - 1;
    let lead = poly[n];
    // Initial guesses on a circle of radius (|a0/an|)^(1/n), offset to break symmetry.
    let radius = {
        let r = (poly[0].norm() / lead.norm()).powf(T::one() / T::of_usize(n));
        if r.is_finite() && r > T::zero() {
            r
        } else {
            T::one()
        }
    };
    let two_pi = T::TAU();
    let mut z: Vec<Cplx<T>> = (0..n)
        .map(|k| cis(two_pi * T::of_usize(k) / T::of_usize(n) + T::of(0.4)).scale(radius))
        .collect();

    // Running error bound for |p(z)| uses |coeffs| evaluated at |z|.
    let abs_poly: Vec<T> = poly.iter().map(|c| c.norm()).collect();
    let mut done = vec![false; n];
    let tol = T::epsilon() * T::of(4.0);

    for _ in 0..MAX_ITERATIONS {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (p, dp) = eval_with_derivative(poly, z[i]);
            let rz = z[i].norm();
            let bound = abs_poly.iter().rev().fold(T::zero(), |acc, &a| acc * rz + a);
            if p.norm() <= tol * bound {
                done[i] = true;
                continue;
            }
            all_done = false;
            if dp.is_zero() {
                // Stationary point: nudge off it rather than divide by zero.
                z[i] = z[i] + cis(T::of(0.7 + i as f64)).scale(T::epsilon().sqrt() * (T::one() + rz));
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Cplx::zero();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let diff = z[i] - zj;
                    if !diff.is_zero() {
                        repulsion = repulsion + diff.inv();
                    }
                }
            }
            let denom = Cplx::new(T::one(), T::zero()) - ratio * repulsion;
            let finite = |c: Cplx<T>| c.re.is_finite() && c.im.is_finite();
            let mut step = ratio / denom;
            if denom.is_zero() || !finite(step) {
                step = ratio;
            }
            if !finite(step) {
                z[i] = z[i] + cis(T::of(0.7 + i as f64)).scale(T::epsilon().sqrt() * (T::one() + rz));
                continue;
            }
            z[i] = z[i] - step;
            if !finite(z[i]) {
                return Err(Error::NumericalFailure("root iteration diverged".into()));
            }
            if step.norm() <= tol * z[i].norm() {
                done[i] = true;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    // Not every root met the residual test; accept if residuals are still small.
    let worst = z
        .iter()
        .map(|&zi| {
            let rz = zi.norm();
            let bound = abs_poly.iter().rev().fold(T::zero(), |acc, &a| acc * rz + a);
            eval(poly, zi).norm() / bound
        })
        .fold(T::zero(), T::max);
    if worst <= T::epsilon().sqrt() {
        Ok(z)
    } else {
        Err(Error::NumericalFailure(format!(
            "polynomial root iteration stalled (relative residual {worst})"
        )))
    }
}
