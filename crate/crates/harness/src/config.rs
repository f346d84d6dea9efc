//! Campaign configuration, read from TOML.
//!
//! ```toml
//! trials = 500
//! output = "runs/snr"
//!
//! [design]
//! kind = "aligned"        # or "misaligned"
//! antennas = 3
//! movements = 1
//! spacing_wavelengths = 0.5
//!
//! [scenario]
//! snr_db = 10.0
//! snapshots = 1000
//! nlos_attenuation_db = 10.0
//! targets = [{ los = -20.3 }, { los = 10.7, nlos = [12.0] }]
//! random_nlos = { per_target = 2, half_width_deg = 5.0 }
//!
//! [sweep]
//! axis = "snr_db"         # or "snapshots", "movements"
//! values = [-12.0, -9.0, -6.0]
//!
//! [estimator]
//! detector = "ratio"      # or "mdl", "fixed" (with k = ...)
//! precision = "f64"
//! ```
//!
//! `targets` may be replaced by `evenly_spaced = { count = 11, from = -50.0, to = 50.0 }`.

use std::path::{Path, PathBuf};

use fluid_doa::geometry::{design, DesignKind, GeometryDesign};
use fluid_doa::signal::{Alignment, Target};
use fluid_doa::Detector;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const DEFAULT_TRIALS: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub antennas: usize,
    pub movements: usize,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub los: f64,
    #[serde(default)]
    pub nlos: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvenlySpaced {
    pub count: usize,
    pub from: f64,
    pub to: f64,
}

impl EvenlySpaced {
    /// Both endpoints included.
    pub fn angles(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![0.5 * (self.from + self.to)];
        }
        let step = (self.to - self.from) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.from + step * i as f64).collect()
    }
}

/// NLoS directions redrawn every trial, uniform within `half_width_deg` of
/// their LoS direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomNlos {
    pub per_target: usize,
    pub half_width_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub snr_db: f64,
    pub snapshots: usize,
    /// Defaults to the alignment matching the design kind.
    #[serde(default)]
    pub alignment: Option<Alignment>,
    #[serde(default = "default_attenuation")]
    pub nlos_attenuation_db: f64,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub evenly_spaced: Option<EvenlySpaced>,
    #[serde(default)]
    pub random_nlos: Option<RandomNlos>,
}

fn default_attenuation() -> f64 {
    fluid_doa::signal::DEFAULT_NLOS_ATTENUATION_DB
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum Sweep {
    SnrDb(Vec<f64>),
    Snapshots(Vec<usize>),
    Movements(Vec<usize>),
}

impl Sweep {
    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::SnrDb(_) => "snr_db",
            Sweep::Snapshots(_) => "snapshots",
            Sweep::Movements(_) => "movements",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::SnrDb(v) => v.clone(),
            Sweep::Snapshots(v) | Sweep::Movements(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::SnrDb(v) => v.len(),
            Sweep::Snapshots(v) | Sweep::Movements(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Ratio,
    Mdl,
    Fixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub detector: DetectorKind,
    /// Source count for the `fixed` detector.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub precision: Precision,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            detector: DetectorKind::Ratio,
            k: None,
            precision: Precision::F64,
        }
    }
}

impl EstimatorSpec {
    pub fn detector(&self, snapshots: usize) -> Detector {
        match self.detector {
            DetectorKind::Ratio => Detector::EigenRatio,
            DetectorKind::Mdl => Detector::Mdl(snapshots),
            DetectorKind::Fixed => Detector::Fixed(self.k.unwrap_or(0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    pub design: DesignSpec,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub estimator: EstimatorSpec,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// Everything that varies along the sweep, resolved for one point.
#[derive(Clone, Debug)]
pub struct PointSetup {
    pub sweep_value: f64,
    pub design: GeometryDesign,
    pub snr_db: f64,
    pub snapshots: usize,
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn alignment(&self) -> Alignment {
        self.scenario.alignment.unwrap_or(match self.design.kind {
            DesignKind::Aligned => Alignment::Aligned,
            DesignKind::Misaligned => Alignment::Misaligned,
        })
    }

    /// Targets with their fixed NLoS paths; random NLoS are added per trial.
    pub fn targets(&self) -> Vec<Target> {
        let mut out: Vec<Target> = self
            .scenario
            .targets
            .iter()
            .map(|t| Target::with_nlos(t.los, t.nlos.clone()))
            .collect();
        if let Some(even) = &self.scenario.evenly_spaced {
            out.extend(even.angles().into_iter().map(Target::los));
        }
        out
    }

    pub fn los_angles(&self) -> Vec<f64> {
        self.targets().iter().map(|t| t.los_angle).collect()
    }

    fn build_design(&self, movements: usize) -> Result<GeometryDesign, HarnessError> {
        let spacing = self.design.spacing_wavelengths;
        design(self.design.kind, self.design.antennas, movements)
            .and_then(|d| d.with_spacing(spacing, 1.0))
            .map_err(|e| bad(format!("design: {e}")))
    }

    /// Sweep points, or the single base point when there is no sweep.
    pub fn points(&self) -> Result<Vec<PointSetup>, HarnessError> {
        let base = |design: GeometryDesign, value: f64| PointSetup {
            sweep_value: value,
            design,
            snr_db: self.scenario.snr_db,
            snapshots: self.scenario.snapshots,
        };
        let d0 = self.build_design(self.design.movements)?;
        Ok(match &self.sweep {
            None => vec![base(d0, self.scenario.snr_db)],
            Some(Sweep::SnrDb(v)) => v
                .iter()
                .map(|&s| PointSetup {
                    snr_db: s,
                    ..base(d0.clone(), s)
                })
                .collect(),
            Some(Sweep::Snapshots(v)) => v
                .iter()
                .map(|&t| PointSetup {
                    snapshots: t,
                    ..base(d0.clone(), t as f64)
                })
                .collect(),
            Some(Sweep::Movements(v)) => v
                .iter()
                .map(|&g| Ok(base(self.build_design(g)?, g as f64)))
                .collect::<Result<_, HarnessError>>()?,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(bad("trials must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(bad("workers must be at least 1"));
        }
        let sp = self.design.spacing_wavelengths;
        if !(sp > 0.0 && sp.is_finite()) {
            return Err(bad("spacing_wavelengths must be positive"));
        }
        if self.scenario.snapshots == 0 {
            return Err(bad("snapshots must be at least 1"));
        }
        if !self.scenario.snr_db.is_finite() {
            return Err(bad("snr_db must be finite"));
        }
        if let Some(even) = &self.scenario.evenly_spaced {
            if even.count == 0 || !(even.from.is_finite() && even.to.is_finite()) {
                return Err(bad("evenly_spaced needs a positive count and finite bounds"));
            }
        }
        if let Some(r) = &self.scenario.random_nlos {
            if !(r.half_width_deg >= 0.0 && r.half_width_deg.is_finite()) {
                return Err(bad("random_nlos.half_width_deg must be non-negative"));
            }
        }
        let targets = self.targets();
        if targets.is_empty() {
            return Err(bad("scenario needs at least one target"));
        }
        let width = self.scenario.random_nlos.as_ref().map_or(0.0, |r| r.half_width_deg);
        for t in &targets {
            if !(t.los_angle.abs() + width < 90.0) {
                return Err(bad(format!("target angle {} leaves (-90, 90)", t.los_angle)));
            }
            if let Some(a) = t.nlos_angles.iter().find(|a| !(a.abs() < 90.0)) {
                return Err(bad(format!("NLoS angle {a} leaves (-90, 90)")));
            }
        }
        let mut los = self.los_angles();
        los.sort_by(f64::total_cmp);
        if los.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad("LoS angles must be distinct"));
        }
        if let Some(sweep) = &self.sweep {
            let v = sweep.values();
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad("sweep values must be finite"));
            }
            if v.windows(2).any(|w| w[0] > w[1]) {
                return Err(bad("sweep values must be sorted ascending"));
            }
            if matches!(sweep, Sweep::Snapshots(s) if s.contains(&0)) {
                return Err(bad("snapshot sweep values must be positive"));
            }
        }
        let k = targets.len();
        match (self.estimator.detector, self.estimator.k) {
            (DetectorKind::Fixed, None) => return Err(bad("fixed detector needs k")),
            (DetectorKind::Fixed, Some(0)) => return Err(bad("fixed detector needs k >= 1")),
            (DetectorKind::Ratio | DetectorKind::Mdl, Some(_)) => {
                return Err(bad("k is only used by the fixed detector"))
            }
            _ => {}
        }
        for p in self.points()? {
            let delta = p.design.delta();
            if k > delta {
                return Err(bad(format!(
                    "{k} LoS targets exceed the capacity Δ = {delta} of the design at sweep value {}",
                    p.sweep_value
                )));
            }
            if let Some(fixed) = self.estimator.k {
                if fixed > delta {
                    return Err(bad(format!("fixed k = {fixed} exceeds Δ = {delta}")));
                }
            }
        }
        Ok(())
    }
}
