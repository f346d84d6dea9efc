//! CSV, JSON and gnuplot outputs of a campaign.
//!
//! The CSV holds only deterministic columns; timing lives in the JSON.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::campaign::CampaignResult;
use crate::error::HarnessError;

pub const CSV_HEADER: &str = "sweep_value,rmse_deg,crb_sqrt_deg,detect_rate,trials";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

pub fn to_csv(result: &CampaignResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in &result.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.sweep_value,
            opt(p.rmse_deg),
            opt(p.crb_sqrt_deg),
            p.detect_rate,
            p.trials
        );
    }
    s
}

pub fn to_json(result: &CampaignResult) -> String {
    serde_json::to_string_pretty(result).expect("campaign result serializes")
}

pub fn from_json(text: &str) -> Result<CampaignResult, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("campaign JSON: {e}")))
}

/// Whitespace-separated columns for gnuplot.
pub fn to_dat(result: &CampaignResult) -> String {
    let mut s = format!(
        "# {} rmse_deg rmse_stderr_deg crb_sqrt_deg detect_rate\n",
        result.metadata.sweep_axis
    );
    for p in &result.points {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            p.sweep_value,
            opt(p.rmse_deg),
            opt(p.rmse_stderr_deg),
            opt(p.crb_sqrt_deg),
            p.detect_rate
        );
    }
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(&path, text).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `<prefix>.csv`, `<prefix>.json` and `<prefix>.dat`.
pub fn write_outputs(result: &CampaignResult, prefix: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let with = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(".");
        p.push(ext);
        PathBuf::from(p)
    };
    Ok(vec![
        write(with("csv"), &to_csv(result))?,
        write(with("json"), &to_json(result))?,
        write(with("dat"), &to_dat(result))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{run_campaign_with, TruthPassthrough};
    use crate::config::CampaignConfig;

    fn result() -> CampaignResult {
        let cfg = CampaignConfig::from_toml(
            r#"
seed = 2
trials = 3
[design]
kind = "aligned"
antennas = 3
movements = 1
[scenario]
snr_db = 10.0
snapshots = 50
targets = [{ los = 0.0 }]
"#,
        )
        .unwrap();
        run_campaign_with(&cfg, &TruthPassthrough).unwrap()
    }

    #[test]
    fn empty_result_is_header_only() {
        let mut r = result();
        r.points.clear();
        assert_eq!(to_csv(&r), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_point_gives_two_lines() {
        let csv = to_csv(&result());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        assert!(lines[1].ends_with(",1,3"));
    }

    #[test]
    fn missing_values_print_as_nan() {
        let mut r = result();
        r.points[0].rmse_deg = None;
        assert!(to_csv(&r).lines().nth(1).unwrap().contains(",nan,"));
    }

    #[test]
    fn json_round_trips() {
        let r = result();
        assert_eq!(from_json(&to_json(&r)).unwrap(), r);
    }

    #[test]
    fn outputs_land_next_to_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_outputs(&result(), &dir.path().join("sub/run")).unwrap();
        for (p, ext) in paths.iter().zip(["csv", "json", "dat"]) {
            assert_eq!(p.extension().unwrap(), ext);
            assert!(p.exists());
        }
    }
}
