//! Narrowband multipath snapshot synthesis for fluid-antenna arrays.
//!
//! Each target contributes one LoS path and any number of NLoS paths. All
//! paths of a target carry that target's symbol stream with independent
//! complex Gaussian path gains. Gains are drawn once per snapshot index and
//! reused for every movement. In the aligned regime the symbol stream also
//! repeats across movements; in the misaligned regime it is redrawn.
//!
//! Randomness comes from one ChaCha stream per role (gains, symbols,
//! noise), all keyed by the scenario seed, so results never depend on
//! evaluation order.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometryDesign;
use crate::linalg::CMatrix;
use crate::scalar::{cis, Cplx, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Aligned,
    Misaligned,
}

/// One radiating target: a LoS direction plus optional NLoS directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// LoS direction in degrees.
    pub los_angle: f64,
    /// NLoS directions in degrees.
    #[serde(default)]
    pub nlos_angles: Vec<f64>,
}

impl Target {
    pub fn los(angle: f64) -> Self {
        Self {
            los_angle: angle,
            nlos_angles: Vec::new(),
        }
    }

    pub fn with_nlos(angle: f64, nlos: impl Into<Vec<f64>>) -> Self {
        Self {
            los_angle: angle,
            nlos_angles: nlos.into(),
        }
    }
}

pub const DEFAULT_NLOS_ATTENUATION_DB: f64 = 10.0;

fn default_attenuation() -> f64 {
    DEFAULT_NLOS_ATTENUATION_DB
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub targets: Vec<Target>,
    /// Per-path LoS SNR in dB (unit LoS power against the noise floor).
    pub snr_db: f64,
    /// Snapshots `T` per movement.
    pub snapshots: usize,
    pub alignment: Alignment,
    /// Power attenuation of every NLoS path relative to LoS, in dB.
    #[serde(default = "default_attenuation")]
    pub nlos_attenuation_db: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(targets: Vec<Target>, snr_db: f64, snapshots: usize, alignment: Alignment, seed: u64) -> Self {
        Self {
            targets,
            snr_db,
            snapshots,
            alignment,
            nlos_attenuation_db: DEFAULT_NLOS_ATTENUATION_DB,
            seed,
        }
    }

    pub fn los_angles(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.los_angle).collect()
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.snr_db)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots == 0 {
            return Err(Error::InvalidScenario("need at least one snapshot".into()));
        }
        if self.snr_db.is_nan() || self.nlos_attenuation_db.is_nan() {
            return Err(Error::InvalidScenario("SNR and attenuation must be numbers".into()));
        }
        for t in &self.targets {
            for &a in std::iter::once(&t.los_angle).chain(&t.nlos_angles) {
                check_angle(a)?;
            }
        }
        let mut los = self.los_angles();
        los.sort_by(f64::total_cmp);
        if los.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScenario("LoS angles must be distinct".into()));
        }
        Ok(())
    }
}

/// Noise variance for a per-path LoS SNR, with LoS received power fixed at 1.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

fn check_angle(angle_deg: f64) -> Result<()> {
    if angle_deg.is_finite() && angle_deg.abs() < 90.0 {
        Ok(())
    } else {
        Err(Error::AngleDomain(angle_deg))
    }
}

/// Phase increment per lattice unit, `2π (d/λ) sin θ`.
pub fn phase_step<T: Real>(spacing_wavelengths: f64, angle_deg: f64) -> T {
    T::TAU() * T::of(spacing_wavelengths) * T::of(angle_deg).to_radians().sin()
}

/// Steering vector with entries `exp(-j x_i 2π sin θ / λ)`, `x_i = p_i d`.
pub fn steering_vector<T: Real>(
    positions: &[i64],
    spacing: f64,
    wavelength: f64,
    angle_deg: f64,
) -> Result<Vec<Cplx<T>>> {
    check_angle(angle_deg)?;
    let step = phase_step::<T>(spacing / wavelength, angle_deg);
    Ok(positions.iter().map(|&p| cis(-T::of_i64(p) * step)).collect())
}

/// Received samples of one layout: `M` rows by `T` snapshot columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotBlock<T: Real> {
    pub movement: usize,
    pub samples: CMatrix<T>,
}

impl<T: Real> SnapshotBlock<T> {
    pub fn snapshots(&self) -> usize {
        self.samples.cols()
    }

    /// Text dump, one row per element with `re,im` pairs.
    pub fn to_text(&self) -> String {
        format!("# movement {}\n{}", self.movement, self.samples.to_text())
    }
}

/// Seed for item `index` of a family keyed by `base` (SplitMix64 mixing).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream roles.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum StreamRole {
    Gains = 1,
    Symbols = 2,
    Noise = 3,
    /// Reserved for scenario construction by callers (e.g. random NLoS angles).
    Layout = 4,
}

pub fn role_rng(seed: u64, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role as u64);
    rng
}

/// Circular complex Gaussian sample with the given variance.
pub fn complex_normal<T: Real>(rng: &mut impl Rng, variance: f64) -> Cplx<T> {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(T::of(re * s), T::of(im * s))
}

/// Draws one snapshot block per movement `v = 0..=G`.
pub fn synthesize<T: Real>(scenario: &Scenario, design: &GeometryDesign) -> Result<Vec<SnapshotBlock<T>>> {
    scenario.validate()?;
    let n_snap = scenario.snapshots;
    let m = design.antennas();
    let layouts = design.movements + 1;
    let k = scenario.targets.len();

    let nlos_var = 10f64.powf(-scenario.nlos_attenuation_db / 10.0);
    let noise_std = T::of(scenario.noise_variance().sqrt());

    // gains[t][k][l], l = 0 is the LoS path.
    let mut gain_rng = role_rng(scenario.seed, StreamRole::Gains);
    let gains: Vec<Vec<Vec<Cplx<T>>>> = (0..n_snap)
        .map(|_| {
            scenario
                .targets
                .iter()
                .map(|tg| {
                    (0..=tg.nlos_angles.len())
                        .map(|l| complex_normal(&mut gain_rng, if l == 0 { 1.0 } else { nlos_var }))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut sym_rng = role_rng(scenario.seed, StreamRole::Symbols);
    let symbol_sets = match scenario.alignment {
        Alignment::Aligned => 1,
        Alignment::Misaligned => layouts,
    };
    // symbols[set][t][k]
    let symbols: Vec<Vec<Vec<Cplx<T>>>> = (0..symbol_sets)
        .map(|_| {
            (0..n_snap)
                .map(|_| (0..k).map(|_| complex_normal(&mut sym_rng, 1.0)).collect())
                .collect()
        })
        .collect();

    let mut noise_rng = role_rng(scenario.seed, StreamRole::Noise);
    let mut blocks = Vec::with_capacity(layouts);
    for v in 0..layouts {
        let layout = design.layout(v);
        // steering[k][l] over this layout
        let steering: Vec<Vec<Vec<Cplx<T>>>> = scenario
            .targets
            .iter()
            .map(|tg| {
                std::iter::once(tg.los_angle)
                    .chain(tg.nlos_angles.iter().copied())
                    .map(|a| steering_vector(layout, design.spacing, design.wavelength, a))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let sym = &symbols[if symbol_sets == 1 { 0 } else { v }];
        let mut samples = CMatrix::zeros(m, n_snap);
        for t in 0..n_snap {
            let mut y = vec![Cplx::<T>::zero(); m];
            for kk in 0..k {
                for (l, a) in steering[kk].iter().enumerate() {
                    let amp = gains[t][kk][l] * sym[t][kk];
                    for (yi, &ai) in y.iter_mut().zip(a) {
                        *yi = *yi + ai * amp;
                    }
                }
            }
            for (i, yi) in y.into_iter().enumerate() {
                let n: Cplx<T> = complex_normal(&mut noise_rng, 1.0);
                samples[(i, t)] = yi + n.scale(noise_std);
            }
        }
        blocks.push(SnapshotBlock { movement: v, samples });
    }
    Ok(blocks)
}
