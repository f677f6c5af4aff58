use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use secplf_cli::analysis::{self, load_market_caps, load_series_dir};
use secplf_cli::exit_codes;
use secplf_cli::runner::run_scenario;
use secplf_cli::scenario::ScenarioConfig;
use secplf_cli::suite::run_suite;
use secplf_core::analyzer::RiskParams;
use secplf_core::plf::PriceMode;

/// Deterministic simulator of flash-loan oracle-manipulation attacks on a
/// lending protocol, the price guard that stops them, and a minute-data
/// oracle-refresh risk analyzer.
#[derive(Parser)]
#[command(name = "secplf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the attack described by a scenario file and report the outcome.
    SimulateAttack {
        /// Path to a scenario JSON file.
        scenario: PathBuf,
        /// Force the guarded price mode, whatever the scenario says.
        #[arg(long, conflicts_with = "unguarded")]
        guarded: bool,
        /// Force the raw-oracle price mode.
        #[arg(long)]
        unguarded: bool,
        /// Write the per-step trace (with guard queries) as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the attack report as JSON instead of stdout only.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Compute oracle-refresh risk statistics over minute close-price CSVs.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Run the randomized invariant sweeps.
    PropertySuite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Negative control: disable the guard's price cap so the suite
        /// fails, proving the sweeps detect a broken guard.
        #[arg(long, hide = true)]
        corrupt_guard: bool,
    },
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Largest safe refresh interval per asset.
    Tz(AnalyzeArgs),
    /// Sampled CDF of the normalized windowed discrepancy.
    Cdf {
        #[command(flatten)]
        common: AnalyzeArgs,
        #[arg(long, default_value_t = 100)]
        buckets: usize,
    },
    /// Non-exceedance probability at the fixed window.
    Exceedance(AnalyzeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of per-asset `timestamp,close` CSVs.
    #[arg(long, env = "SECPLF_DATA_DIR")]
    data_dir: PathBuf,
    /// Safe collateralization ratio / per-block price-growth cap.
    #[arg(long, default_value_t = 1.25)]
    epsilon: f64,
    /// Confidence level for the refresh interval (default 1 - 1e-5).
    #[arg(long)]
    z: Option<f64>,
    /// Window (refresh interval) in minutes for cdf/exceedance.
    #[arg(long, default_value_t = 600)]
    t: usize,
    /// Directory for report artifacts.
    #[arg(long, default_value = "analysis-out")]
    out_dir: PathBuf,
}

impl AnalyzeArgs {
    fn params(&self) -> RiskParams {
        RiskParams {
            epsilon: self.epsilon,
            z: self.z.unwrap_or(1.0 - 1e-5),
            t: self.t,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(exit_codes::CONFIG_ERROR as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::SimulateAttack {
            scenario,
            guarded,
            unguarded,
            trace_out,
            report_out,
        } => {
            let config = ScenarioConfig::from_path(&scenario).map_err(|e| e.to_string())?;
            let mode = if guarded {
                Some(PriceMode::SecPlfGuard)
            } else if unguarded {
                Some(PriceMode::RawOracle)
            } else {
                None
            };
            let result = run_scenario(&config, mode).map_err(|e| e.to_string())?;
            let body = serde_json::to_string_pretty(&result.report_json)
                .map_err(|e| e.to_string())?;
            println!("{body}");
            if let Some(path) = report_out {
                std::fs::write(&path, &body)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            if let Some(path) = trace_out {
                let trace = serde_json::to_string_pretty(&result.trace_json)
                    .map_err(|e| e.to_string())?;
                std::fs::write(&path, trace)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(exit_codes::OK)
        }
        Command::Analyze { what } => {
            let (args, buckets) = match &what {
                AnalyzeCommand::Tz(a) | AnalyzeCommand::Exceedance(a) => (a, None),
                AnalyzeCommand::Cdf { common, buckets } => (common, Some(*buckets)),
            };
            let series = load_series_dir(&args.data_dir).map_err(|e| e.to_string())?;
            let params = args.params();
            let (report, cdfs) = match &what {
                AnalyzeCommand::Tz(_) => {
                    let caps = load_market_caps(&args.data_dir).map_err(|e| e.to_string())?;
                    let report = analysis::tz_report(&series, &params, caps.as_ref())
                        .map_err(|e| e.to_string())?;
                    (report, None)
                }
                AnalyzeCommand::Exceedance(_) => (
                    analysis::exceedance_report(&series, &params).map_err(|e| e.to_string())?,
                    None,
                ),
                AnalyzeCommand::Cdf { .. } => {
                    let cdfs = analysis::cdf_reports(&series, &params, buckets.unwrap())
                        .map_err(|e| e.to_string())?;
                    let report = analysis::exceedance_report(&series, &params)
                        .map_err(|e| e.to_string())?;
                    (report, Some(cdfs))
                }
            };
            let written = analysis::write_artifacts(&args.out_dir, &report, cdfs.as_deref())
                .map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
            );
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(exit_codes::OK)
        }
        Command::PropertySuite {
            seed,
            trials,
            corrupt_guard,
        } => {
            let report = run_suite(seed, trials, corrupt_guard);
            for line in &report.lines {
                println!("{line}");
            }
            if report.passed() {
                println!("property suite: all sweeps passed (seed {seed}, trials {trials})");
                Ok(exit_codes::OK)
            } else {
                for failure in &report.failures {
                    eprintln!("counterexample: {failure}");
                }
                Ok(exit_codes::INVARIANT_VIOLATION)
            }
        }
    }
}
