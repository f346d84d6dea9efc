use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fluid_doa::geometry::{design, difference_coarray, max_consecutive_dof, virtual_positions, DesignKind};
use fluid_doa_harness::campaign::point_crb;
use fluid_doa_harness::{emit, run_campaign, selftest, CampaignConfig, HarnessError};

#[derive(Parser)]
#[command(name = "fluid-doa", version, about = "Fluid-antenna sparse array DOA simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Aligned,
    Misaligned,
}

#[derive(Subcommand)]
enum Command {
    /// Print a geometry with its co-array report.
    Design {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Total antenna count M.
        #[arg(long)]
        antennas: usize,
        /// Number of movements G.
        #[arg(long, default_value_t = 1)]
        movements: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run a Monte-Carlo campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        /// Output prefix; `.csv`, `.json` and `.dat` are appended.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the aligned-manifold CRB along the configured sweep.
    Crb {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in oracle checks.
    Selftest,
}

fn print_design(kind: Kind, antennas: usize, movements: usize, json: bool) -> Result<(), HarnessError> {
    let kind = match kind {
        Kind::Aligned => DesignKind::Aligned,
        Kind::Misaligned => DesignKind::Misaligned,
    };
    let d = design(kind, antennas, movements).map_err(|e| HarnessError::Config(e.to_string()))?;
    if json {
        println!("{}", serde_json::to_string_pretty(&d).expect("design serializes"));
        return Ok(());
    }
    let v = virtual_positions(&d);
    let lags = difference_coarray(&v);
    println!("kind: {}", d.kind);
    println!("M1 = {}, M2 = {}, G = {}", d.m1, d.m2, d.movements);
    println!("d = {} wavelengths", d.spacing_wavelengths());
    for (i, p) in d.positions.iter().enumerate() {
        println!("movement {i}: {p:?}");
    }
    println!("virtual positions: {v:?}");
    println!(
        "consecutive lags: [{}, {}] ({} DoF, closed form {})",
        lags.consecutive_range.0,
        lags.consecutive_range.1,
        lags.consecutive_count,
        max_consecutive_dof(antennas, movements, kind)?
    );
    println!("delta = {}", d.delta());
    Ok(())
}

fn run(
    config: PathBuf,
    seed: u64,
    trials: Option<usize>,
    output: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), HarnessError> {
    let mut cfg = CampaignConfig::load(&config)?;
    cfg.seed = Some(seed);
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if output.is_some() {
        cfg.output = output;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    let result = run_campaign(&cfg)?;
    match &cfg.output {
        Some(prefix) => {
            for p in emit::write_outputs(&result, prefix)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => write_stdout(&emit::to_csv(&result)),
    }
    Ok(())
}

/// A closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) {
    if let Err(e) = std::io::stdout().lock().write_all(text.as_bytes()) {
        if e.kind() != ErrorKind::BrokenPipe {
            eprintln!("error: writing stdout: {e}");
        }
    }
}

fn crb(config: PathBuf) -> Result<(), HarnessError> {
    let cfg = CampaignConfig::load(&config)?;
    cfg.validate()?;
    let mut out = String::from("sweep_value,crb_sqrt_deg\n");
    for p in cfg.points()? {
        let v = point_crb(&cfg, &p).ok_or_else(|| {
            fluid_doa::Error::BoundUndefined(format!("at sweep value {}", p.sweep_value))
        })?;
        out.push_str(&format!("{},{}\n", p.sweep_value, v));
    }
    write_stdout(&out);
    Ok(())
}

fn selftest_cmd() -> Result<bool, HarnessError> {
    let checks = selftest::run_all();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design {
            kind,
            antennas,
            movements,
            json,
        } => print_design(kind, antennas, movements, json).map(|_| true),
        Command::Run {
            config,
            seed,
            trials,
            output,
            workers,
        } => run(config, seed, trials, output, workers).map(|_| true),
        Command::Crb { config } => crb(config).map(|_| true),
        Command::Selftest => selftest_cmd(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
