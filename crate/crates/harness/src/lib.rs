//! Monte-Carlo campaigns, result files and the oracle self-test behind the
//! `fluid-doa` command.

pub mod campaign;
pub mod config;
pub mod emit;
pub mod error;
pub mod selftest;

pub use campaign::{run_campaign, run_campaign_with, CampaignResult, PointResult, TrialEstimator};
pub use config::CampaignConfig;
pub use error::HarnessError;
