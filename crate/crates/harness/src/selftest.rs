//! Quick oracle checks runnable from the CLI.

use fluid_doa::covariance::{expected_covariance, rearrange_to_lags, CovarianceMode};
use fluid_doa::crb::{crb_theta, fim, CrbInput};
use fluid_doa::geometry::{design, difference_coarray, max_consecutive_dof, virtual_positions, DesignKind};
use fluid_doa::linalg::inverse;
use fluid_doa::{estimate, Detector};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn geometry_closed_forms() -> Check {
    let mut bad = Vec::new();
    for kind in [DesignKind::Aligned, DesignKind::Misaligned] {
        for m in 2..=12 {
            for g in 0..=4 {
                let ok = design(kind, m, g).ok().and_then(|d| {
                    let count = difference_coarray(&virtual_positions(&d)).consecutive_count;
                    max_consecutive_dof(m, g, kind).ok().map(|f| f == count)
                });
                if ok != Some(true) {
                    bad.push(format!("{kind} M={m} G={g}"));
                }
            }
        }
    }
    Check {
        name: "co-array closed forms",
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "110 designs".into() } else { bad.join(", ") },
    }
}

fn exact_recovery() -> Check {
    let mut worst = 0.0f64;
    let mut err = None;
    for (kind, mode, m, g) in [
        (DesignKind::Aligned, CovarianceMode::Stacked, 3, 1),
        (DesignKind::Misaligned, CovarianceMode::PerMovement, 4, 1),
    ] {
        let d = design(kind, m, g).expect("valid design");
        let k = d.delta();
        let angles: Vec<f64> = (0..k).map(|i| -60.0 + 120.0 * i as f64 / (k - 1) as f64).collect();
        let run = expected_covariance::<f64>(&d, &angles, &vec![1.0; k], 1.0, mode)
            .and_then(|c| rearrange_to_lags(&c, &d))
            .and_then(|r| estimate(&r, Detector::Fixed(k), d.spacing, d.wavelength));
        match run {
            Ok(est) => {
                for (a, b) in est.angles_deg.iter().zip(&angles) {
                    worst = worst.max((a - b).abs());
                }
            }
            Err(e) => err = Some(e.to_string()),
        }
    }
    Check {
        name: "exact-covariance recovery at capacity",
        passed: err.is_none() && worst < 1e-6,
        detail: err.unwrap_or_else(|| format!("max error {worst:.2e} deg")),
    }
}

fn crb_schur() -> Check {
    let d = design(DesignKind::Aligned, 3, 1).expect("valid design");
    let input = CrbInput::unit_powers(d, vec![-20.3, 10.7], 1.0, 500);
    let result = (|| -> fluid_doa::Result<f64> {
        let f = fim::<f64>(&input)?;
        let oracle = inverse(&f.to_complex())?.real_part();
        let crb = crb_theta::<f64>(&input)?.matrix;
        let mut worst = 0.0f64;
        for i in 0..2 {
            worst = worst.max((crb[(i, i)] - oracle[(i, i)]).abs() / oracle[(i, i)]);
        }
        Ok(worst)
    })();
    match result {
        Ok(w) => Check {
            name: "closed-form CRB vs inverse FIM",
            passed: w < 1e-8,
            detail: format!("max relative error {w:.2e}"),
        },
        Err(e) => Check {
            name: "closed-form CRB vs inverse FIM",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_all() -> Vec<Check> {
    vec![geometry_closed_forms(), exact_recovery(), crb_schur()]
}
