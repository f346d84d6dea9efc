//! Seeded Monte-Carlo campaigns over a sweep axis.
//!
//! Trial `i` uses the seed `derive_seed(seed, i)` at every sweep point, so
//! neighbouring points share their random draws and differences between
//! points are not masked by sampling noise. Trials run on a rayon pool and
//! are collected in trial order before any aggregation, which keeps results
//! identical for any worker count.

use std::time::Instant;

use fluid_doa::covariance::{rearrange_to_lags, sample_covariance};
use fluid_doa::crb::{crb_rmse_deg, CrbInput};
use fluid_doa::geometry::{design_aligned_split, GeometryDesign};
use fluid_doa::signal::{derive_seed, role_rng, synthesize, Scenario, StreamRole};
use fluid_doa::{estimate, Detector, Real};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CampaignConfig, PointSetup, Precision};
use crate::error::HarnessError;

pub const SNR_CONVENTION: &str =
    "per-path LoS SNR: unit LoS power (unit-power symbols, unit mean-square gain), noise variance 10^(-snr_db/10)";
pub const CRB_MANIFOLD: &str =
    "aligned-manifold CRB: stacked aligned design with the same M and G, LoS angles with unit powers, known noise variance, NLoS ignored";
pub const RMSE_DEFINITION: &str =
    "root mean square angle error in degrees over trials with K_hat = K, sorted estimates paired with sorted truth";

/// Inputs of one trial.
#[derive(Clone, Debug)]
pub struct TrialContext<'a> {
    pub design: &'a GeometryDesign,
    pub scenario: Scenario,
    pub detector: Detector,
    pub precision: Precision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub k_hat: usize,
    /// Ascending.
    pub angles_deg: Vec<f64>,
}

/// Anything that turns a trial into angle estimates.
pub trait TrialEstimator: Sync {
    fn run(&self, ctx: &TrialContext<'_>) -> fluid_doa::Result<TrialOutcome>;
}

/// Synthesis, covariance, lag rearrangement and rooting.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pipeline;

fn pipeline<T: Real>(ctx: &TrialContext<'_>) -> fluid_doa::Result<TrialOutcome> {
    let blocks = synthesize::<T>(&ctx.scenario, ctx.design)?;
    let cov = sample_covariance(&blocks, ctx.scenario.alignment.into())?;
    let r = rearrange_to_lags(&cov, ctx.design)?;
    let est = estimate(&r, ctx.detector, ctx.design.spacing, ctx.design.wavelength)?;
    Ok(TrialOutcome {
        k_hat: est.k_hat,
        angles_deg: est.angles_deg.iter().map(|a| a.as_f64()).collect(),
    })
}

impl TrialEstimator for Pipeline {
    fn run(&self, ctx: &TrialContext<'_>) -> fluid_doa::Result<TrialOutcome> {
        match ctx.precision {
            Precision::F64 => pipeline::<f64>(ctx),
            Precision::F32 => pipeline::<f32>(ctx),
        }
    }
}

/// Returns the true LoS angles; checks the harness plumbing.
#[derive(Clone, Copy, Debug, Default)]
pub struct TruthPassthrough;

impl TrialEstimator for TruthPassthrough {
    fn run(&self, ctx: &TrialContext<'_>) -> fluid_doa::Result<TrialOutcome> {
        let mut angles = ctx.scenario.los_angles();
        angles.sort_by(f64::total_cmp);
        Ok(TrialOutcome {
            k_hat: angles.len(),
            angles_deg: angles,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub sweep_value: f64,
    pub trials: usize,
    /// Trials with `K_hat = K` and a successful estimate.
    pub detected: usize,
    pub detect_rate: f64,
    pub failure_rate: f64,
    /// Trials whose estimator returned an error (counted at `K_hat = 0`).
    pub numerical_failures: usize,
    pub rmse_deg: Option<f64>,
    pub rmse_stderr_deg: Option<f64>,
    /// Mean signed error per target (ascending LoS order) over detected trials.
    pub bias_deg: Vec<f64>,
    pub crb_sqrt_deg: Option<f64>,
    /// Index is `K_hat`.
    pub k_hat_histogram: Vec<usize>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetadata {
    pub version: String,
    pub seed: u64,
    pub sweep_axis: String,
    pub snr_convention: String,
    pub crb_manifold: String,
    pub rmse_definition: String,
    pub config: CampaignConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub metadata: CampaignMetadata,
    pub points: Vec<PointResult>,
}

/// Scenario of trial `trial`, with per-trial random NLoS directions.
pub fn trial_scenario(config: &CampaignConfig, point: &PointSetup, seed: u64, trial: usize) -> Scenario {
    let trial_seed = derive_seed(seed, trial as u64);
    let mut targets = config.targets();
    if let Some(r) = &config.scenario.random_nlos {
        let mut rng = role_rng(trial_seed, StreamRole::Layout);
        let w = r.half_width_deg;
        for t in &mut targets {
            for _ in 0..r.per_target {
                t.nlos_angles.push(t.los_angle + rng.random_range(-w..=w));
            }
        }
    }
    let mut sc = Scenario::new(targets, point.snr_db, point.snapshots, config.alignment(), trial_seed);
    sc.nlos_attenuation_db = config.scenario.nlos_attenuation_db;
    sc
}

/// `sqrt` of the mean angle bound in degrees on the aligned manifold, or
/// `None` where the bound is undefined.
pub fn point_crb(config: &CampaignConfig, point: &PointSetup) -> Option<f64> {
    let (m1, m2) = (point.design.m1, point.design.m2);
    let aligned = design_aligned_split(m1, m2, point.design.movements)
        .and_then(|d| d.with_spacing(point.design.spacing, point.design.wavelength))
        .ok()?;
    let input = CrbInput::unit_powers(
        aligned,
        config.los_angles(),
        fluid_doa::signal::noise_variance(point.snr_db),
        point.snapshots,
    );
    crb_rmse_deg::<f64>(&input).ok()
}

fn aggregate(
    point: &PointSetup,
    truth: &[f64],
    outcomes: &[fluid_doa::Result<TrialOutcome>],
) -> PointResult {
    let k = truth.len();
    let mut histogram = vec![0usize; point.design.delta() + 1];
    let mut failures = 0;
    let mut per_trial_mse = Vec::new();
    let mut bias = vec![0.0; k];
    for o in outcomes {
        match o {
            Ok(out) => {
                if out.k_hat >= histogram.len() {
                    histogram.resize(out.k_hat + 1, 0);
                }
                histogram[out.k_hat] += 1;
                if out.k_hat == k && out.angles_deg.len() == k {
                    let mut est = out.angles_deg.clone();
                    est.sort_by(f64::total_cmp);
                    let mut se = 0.0;
                    for (i, (e, t)) in est.iter().zip(truth).enumerate() {
                        bias[i] += e - t;
                        se += (e - t) * (e - t);
                    }
                    per_trial_mse.push(se / k as f64);
                }
            }
            Err(_) => {
                failures += 1;
                histogram[0] += 1;
            }
        }
    }
    let trials = outcomes.len();
    let detected = per_trial_mse.len();
    let (rmse, stderr) = if detected == 0 {
        (None, None)
    } else {
        let n = detected as f64;
        let mean = per_trial_mse.iter().sum::<f64>() / n;
        let rmse = mean.sqrt();
        let var = if detected > 1 {
            per_trial_mse.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        // Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
        let se = if rmse > 0.0 { (var / n).sqrt() / (2.0 * rmse) } else { 0.0 };
        (Some(rmse), Some(se))
    };
    let bias = if detected == 0 {
        Vec::new()
    } else {
        bias.iter().map(|b| b / detected as f64).collect()
    };
    let detect_rate = if trials == 0 { 0.0 } else { detected as f64 / trials as f64 };
    PointResult {
        sweep_value: point.sweep_value,
        trials,
        detected,
        detect_rate,
        failure_rate: 1.0 - detect_rate,
        numerical_failures: failures,
        rmse_deg: rmse,
        rmse_stderr_deg: stderr,
        bias_deg: bias,
        crb_sqrt_deg: None,
        k_hat_histogram: histogram,
        wall_time_s: 0.0,
    }
}

fn run_points(
    config: &CampaignConfig,
    seed: u64,
    estimator: &dyn TrialEstimator,
) -> Result<Vec<PointResult>, HarnessError> {
    let mut truth = config.los_angles();
    truth.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for point in config.points()? {
        let start = Instant::now();
        let detector = config.estimator.detector(point.snapshots);
        let outcomes: Vec<_> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let ctx = TrialContext {
                    design: &point.design,
                    scenario: trial_scenario(config, &point, seed, trial),
                    detector,
                    precision: config.estimator.precision,
                };
                estimator.run(&ctx)
            })
            .collect();
        let mut res = aggregate(&point, &truth, &outcomes);
        res.crb_sqrt_deg = point_crb(config, &point);
        res.wall_time_s = start.elapsed().as_secs_f64();
        out.push(res);
    }
    Ok(out)
}

/// Runs the campaign with the default pipeline.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult, HarnessError> {
    run_campaign_with(config, &Pipeline)
}

pub fn run_campaign_with(
    config: &CampaignConfig,
    estimator: &dyn TrialEstimator,
) -> Result<CampaignResult, HarnessError> {
    config.validate()?;
    let seed = config
        .seed
        .ok_or_else(|| HarnessError::Config("a seed is required for campaign runs".into()))?;
    let points = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?
            .install(|| run_points(config, seed, estimator))?,
        None => run_points(config, seed, estimator)?,
    };
    Ok(CampaignResult {
        metadata: CampaignMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            sweep_axis: config.sweep.as_ref().map_or("none", |s| s.axis_name()).to_string(),
            snr_convention: SNR_CONVENTION.to_string(),
            crb_manifold: CRB_MANIFOLD.to_string(),
            rmse_definition: RMSE_DEFINITION.to_string(),
            config: config.clone(),
        },
        points,
    })
}
