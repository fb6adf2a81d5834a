//! Thin command-line front end: parse flags, load the TOML config, hand off
//! to the library's experiment pipelines, and map results to exit codes.
//!
//! Exit codes: 0 on success (for `report`, success means a certified,
//! strictly positive key rate), 1 when `report` runs fine but cannot certify
//! a positive rate, 2 on any error.

use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flqkd::experiment::{
    self, ExperimentConfig, TagFormat, CAMPAIGN_SUMMARY_FILE, CALIBRATION_FILE,
    MEASUREMENTS_FILE, OUTPUT_ROOT_ENV, SKR_SWEEP_FILE, WINDOW_SWEEP_FILE,
};

#[derive(Parser)]
#[command(
    name = "flqkd",
    version,
    about = "Floodlight-QKD channel-monitor simulation and key-rate analysis",
    propagate_version = true
)]
struct Cli {
    /// TOML experiment config; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding the config's.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory, overriding the config and the output root.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Root for default output directories (one subdirectory per
    /// subcommand).
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, value_name = "DIR")]
    output_root: Option<PathBuf>,

    /// Worker threads for parallel pipelines; results never depend on this.
    #[arg(long, global = true, default_value = "1", value_name = "N")]
    workers: NonZeroUsize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the secret-key-rate formula over a photons-per-bit grid.
    SkrSweep,
    /// Re-extract the injection fraction under several coincidence windows.
    WindowSweep,
    /// Repeat a monitor measurement and pool the estimates into a bound.
    Campaign,
    /// Resolve the error-rate calibration and record the curve parameters.
    Calibrate,
    /// Evaluate one operating point; exits 0 only for a certified positive
    /// key rate.
    Report,
    /// Generate a scenario's time-tag streams and write them to one file.
    ExportTags {
        /// On-disk layout for the exported tags.
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SkrSweep => "skr-sweep",
            Command::WindowSweep => "window-sweep",
            Command::Campaign => "campaign",
            Command::Calibrate => "calibrate",
            Command::Report => "report",
            Command::ExportTags { .. } => "export-tags",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for TagFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Csv => TagFormat::Csv,
            FormatArg::Binary => TagFormat::Binary,
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = match &cli.config {
        // `load` reports the offending path in its own errors.
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let config = config.resolved(cli.seed)?;
    let out_dir = experiment::resolve_output_dir(
        cli.out.as_deref(),
        &config,
        cli.output_root.as_deref(),
        cli.command.name(),
    );
    let workers = cli.workers.get();

    match cli.command {
        Command::SkrSweep => {
            let rows = experiment::run_skr_sweep(&config, &out_dir, workers)?;
            println!(
                "{} operating points -> {}",
                rows.len(),
                out_dir.join(SKR_SWEEP_FILE).display()
            );
        }
        Command::WindowSweep => {
            let points = experiment::run_window_sweep(&config, &out_dir)?;
            println!(
                "{} windows -> {}",
                points.len(),
                out_dir.join(WINDOW_SWEEP_FILE).display()
            );
        }
        Command::Campaign => {
            let result = experiment::run_monitor_campaign(&config, &out_dir, workers)?;
            let pooled = result.pooled;
            println!(
                "{} measurements: injection fraction {} +- {} (upper bound {} at {} sigma) -> {}, {}",
                pooled.n_measurements,
                flqkd::fmt::format_g10(pooled.f_e_mean),
                flqkd::fmt::format_g10(pooled.std_error),
                flqkd::fmt::format_g10(pooled.f_e_upper_bound),
                flqkd::fmt::format_g10(pooled.sigma_multiplier),
                out_dir.join(MEASUREMENTS_FILE).display(),
                out_dir.join(CAMPAIGN_SUMMARY_FILE).display(),
            );
        }
        Command::Calibrate => {
            let params = experiment::run_calibrate(&config, &out_dir)?;
            println!(
                "snr per photon {} (floor {}) -> {}",
                flqkd::fmt::format_g10(params.snr_per_photon),
                flqkd::fmt::format_g10(params.impairment_floor),
                out_dir.join(CALIBRATION_FILE).display(),
            );
        }
        Command::Report => {
            let result = experiment::run_report(&config, &out_dir)?;
            print!("{}", result.summary_text);
            if !result.exit_ok() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ExportTags { format } => {
            let path = experiment::run_export_tags(&config, &out_dir, format.into())?;
            println!("tags -> {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}
