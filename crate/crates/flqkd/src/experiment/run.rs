//! Experiment pipelines. Each function runs one reproducible study from a
//! resolved [`ExperimentConfig`], writes CSV results plus an echo of the
//! config that produced them, and returns the numbers it wrote.
//!
//! Output bytes depend only on the resolved config (seed included), never on
//! the worker count: parallel maps are index-ordered and every float is
//! printed through [`format_g10`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::generate::substream_seed;
use crate::engine::io::{read_count_rates_csv, write_tags_binary, write_tags_csv};
use crate::engine::{
    generate_streams, run_measurement, sweep_window, CoincidenceWindows, ScenarioSpec,
    WindowSweepPoint,
};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, DEFAULT_OUTPUT_ROOT};
use crate::fmt::format_g10;
use crate::link::{ber_model, BerModelParams};
use crate::monitor::{
    estimate_injection_fraction, estimate_std_error, pool_measurements_with_sigma, CountRates,
    MonitorEstimate,
};
use crate::security::{skr, SkrReport};

/// Environment variable naming the root directory for default outputs.
pub const OUTPUT_ROOT_ENV: &str = "FLQKD_OUTPUT_ROOT";

/// Config echo written into every output directory.
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.toml";

pub const SKR_SWEEP_FILE: &str = "skr_sweep.csv";
pub const SKR_SWEEP_HEADER: &str = "photons_per_bit,i_ab,chi_be,skr_bits_per_s,p_e,\
                                    skr_clamped_bits_per_s,bits_per_mode,\
                                    rate_loss_bound_bits_per_mode";

pub const WINDOW_SWEEP_FILE: &str = "window_sweep.csv";
pub const WINDOW_SWEEP_HEADER: &str = "window_s,f_e,std_error";

pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const MEASUREMENTS_HEADER: &str =
    "index,f_e,std_error,s_a,s_b,c_ia,c_ia_acc,c_ib,c_ib_acc,duration_s,window_s";

pub const CAMPAIGN_SUMMARY_FILE: &str = "summary.csv";
pub const CAMPAIGN_SUMMARY_HEADER: &str =
    "n_measurements,f_e_mean,std_error,sigma_multiplier,f_e_upper_bound";

pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const CALIBRATION_HEADER: &str =
    "snr_per_photon,impairment_floor,anchor_photons_per_bit,anchor_error_probability";

pub const REPORT_FILE: &str = "report.csv";
pub const REPORT_HEADER: &str = "photons_per_bit,p_e,i_ab,chi_be,skr_bits_per_s,\
                                 skr_clamped_bits_per_s,bits_per_mode,\
                                 rate_loss_bound_bits_per_mode,injection_bound,certified";

pub const REPORT_TEXT_FILE: &str = "summary.txt";

/// Substream tag that keeps campaign repetition seeds disjoint from the
/// generator's internal category substreams.
const CAMPAIGN_SEED_TAG: u64 = 0x0CA4_BA16;

/// On-disk layout for exported time tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagFormat {
    Csv,
    Binary,
}

/// Pick the output directory: explicit flag, then the config's `output_dir`,
/// then `$FLQKD_OUTPUT_ROOT/<subcommand>`, then `runs/<subcommand>`.
pub fn resolve_output_dir(
    flag: Option<&Path>,
    config: &ExperimentConfig,
    env_root: Option<&Path>,
    subcommand: &str,
) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = &config.output_dir {
        return dir.clone();
    }
    env_root
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
        .join(subcommand)
}

/// Create the output directory and echo the resolved config into it, so
/// every result directory is self-describing and reproducible.
pub fn prepare_out_dir(out_dir: &Path, config: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let echo = out_dir.join(RESOLVED_CONFIG_FILE);
    std::fs::write(&echo, config.to_toml_string()?).map_err(|e| Error::io(&echo, e))
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {workers}-thread pool: {e}")))
}

fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{header}").map_err(io_err)?;
    for row in rows {
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Key-rate sweep over a photons-per-bit grid.
///
/// Grid points are independent, so they are mapped in parallel; the output
/// keeps grid order.
pub fn run_skr_sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<Vec<SkrReport>> {
    let grid = config.skr_sweep.grid_points()?;
    let ber = config.ber_params()?;
    let security = config.security_params();
    let modes_per_bit = config.effective_mode_plan().modes_per_bit();
    let transmissivity = config.effective_channel().transmissivity();
    prepare_out_dir(out_dir, config)?;
    let pool = build_pool(workers)?;
    let rows: Vec<SkrReport> = pool.install(|| {
        grid.par_iter()
            .map(|&n| {
                let p_e = ber_model(n, &ber)?;
                skr(&security, p_e, n, modes_per_bit, transmissivity)
            })
            .collect::<Result<_>>()
    })?;
    write_csv(
        &out_dir.join(SKR_SWEEP_FILE),
        SKR_SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                format_g10(r.photons_per_bit),
                format_g10(r.i_ab),
                format_g10(r.chi_be),
                format_g10(r.skr_bits_per_s),
                format_g10(r.p_e),
                format_g10(r.skr_clamped_bits_per_s),
                format_g10(r.bits_per_mode),
                format_g10(r.rate_loss_bound_bits_per_mode),
            ]
        }),
    )?;
    Ok(rows)
}

/// Generate one set of monitor streams and re-extract the injection fraction
/// under each requested coincidence window.
pub fn run_window_sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<WindowSweepPoint>> {
    let scenario = required_scenario(config, "window-sweep")?;
    if config.window_sweep.windows_s.is_empty() {
        return Err(Error::Config(
            "window_sweep.windows_s must list at least one window".into(),
        ));
    }
    prepare_out_dir(out_dir, config)?;
    let streams = generate_streams(scenario)?;
    let points = sweep_window(
        &streams.idler,
        &streams.alice_tap,
        &streams.bob_tap,
        &config.effective_windows(),
        &config.window_sweep.windows_s,
    )?;
    write_csv(
        &out_dir.join(WINDOW_SWEEP_FILE),
        WINDOW_SWEEP_HEADER,
        points.iter().map(|p| {
            vec![
                format_g10(p.window_s),
                format_g10(p.f_e),
                format_g10(p.std_error),
            ]
        }),
    )?;
    Ok(points)
}

/// One campaign repetition: its count summary and injection-fraction
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignMeasurement {
    pub index: usize,
    pub rates: CountRates,
    pub f_e: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub measurements: Vec<CampaignMeasurement>,
    pub pooled: MonitorEstimate,
}

/// Simulate `n_measurements` independent repetitions of one monitor
/// measurement and return their count summaries in repetition order.
///
/// Repetition `i` runs with its own derived seed, so the set is reproducible
/// from the master seed alone and independent of evaluation order.
pub fn simulate_campaign(
    scenario: &ScenarioSpec,
    windows: &CoincidenceWindows,
    n_measurements: usize,
    seed: u64,
) -> Result<Vec<CountRates>> {
    (0..n_measurements)
        .into_par_iter()
        .map(|i| {
            let mut repetition = *scenario;
            repetition.seed = substream_seed(seed, CAMPAIGN_SEED_TAG, i as u64);
            let (rates, _ledger) = run_measurement(&repetition, windows)?;
            Ok(rates)
        })
        .collect()
}

/// Repeated-measurement campaign: estimate the injection fraction once per
/// repetition, then pool the estimates into a mean, a standard error, and a
/// k-sigma upper bound.
///
/// Repetitions come from the Monte Carlo generator unless
/// `campaign.rates_csv` points at measured count summaries to import
/// instead. The campaign's `measurement_duration_s` overrides the scenario's
/// own duration.
pub fn run_monitor_campaign(
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<CampaignResult> {
    prepare_out_dir(out_dir, config)?;
    let campaign = &config.campaign;
    let rates: Vec<CountRates> = match &campaign.rates_csv {
        Some(path) => read_count_rates_csv(path)?,
        None => {
            let mut scenario = *required_scenario(config, "campaign")?;
            scenario.duration_s = campaign.measurement_duration_s;
            let pool = build_pool(workers)?;
            pool.install(|| {
                simulate_campaign(
                    &scenario,
                    &config.effective_windows(),
                    campaign.n_measurements,
                    config.effective_seed(),
                )
            })?
        }
    };
    let mut measurements = Vec::with_capacity(rates.len());
    let mut estimates = Vec::with_capacity(rates.len());
    for (index, r) in rates.iter().enumerate() {
        let f_e = estimate_injection_fraction(r)?;
        let std_error = estimate_std_error(r)?;
        estimates.push(f_e);
        measurements.push(CampaignMeasurement {
            index,
            rates: *r,
            f_e,
            std_error,
        });
    }
    write_csv(
        &out_dir.join(MEASUREMENTS_FILE),
        MEASUREMENTS_HEADER,
        measurements.iter().map(|m| {
            vec![
                m.index.to_string(),
                format_g10(m.f_e),
                format_g10(m.std_error),
                format_g10(m.rates.s_a),
                format_g10(m.rates.s_b),
                format_g10(m.rates.c_ia),
                format_g10(m.rates.c_ia_acc),
                format_g10(m.rates.c_ib),
                format_g10(m.rates.c_ib_acc),
                format_g10(m.rates.duration_s),
                format_g10(m.rates.window_s),
            ]
        }),
    )?;
    let pooled = pool_measurements_with_sigma(&estimates, campaign.sigma_multiplier)?;
    write_csv(
        &out_dir.join(CAMPAIGN_SUMMARY_FILE),
        CAMPAIGN_SUMMARY_HEADER,
        std::iter::once(summary_row(&pooled)),
    )?;
    Ok(CampaignResult {
        measurements,
        pooled,
    })
}

fn summary_row(pooled: &MonitorEstimate) -> Vec<String> {
    vec![
        pooled.n_measurements.to_string(),
        format_g10(pooled.f_e_mean),
        format_g10(pooled.std_error),
        format_g10(pooled.sigma_multiplier),
        format_g10(pooled.f_e_upper_bound),
    ]
}

/// Read back a campaign `summary.csv`.
pub fn read_monitor_summary_csv(path: &Path) -> Result<MonitorEstimate> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty file".into()))?;
    if header != CAMPAIGN_SUMMARY_HEADER {
        return Err(malformed(format!(
            "bad header {header:?}, expected {CAMPAIGN_SUMMARY_HEADER:?}"
        )));
    }
    let line = lines
        .next()
        .ok_or_else(|| malformed("missing summary row".into()))?;
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 5 {
        return Err(malformed(format!(
            "expected 5 fields, got {}",
            fields.len()
        )));
    }
    let n_measurements: u64 = fields[0]
        .parse()
        .map_err(|e| malformed(format!("bad n_measurements {:?}: {e}", fields[0])))?;
    let mut values = [0f64; 4];
    for (v, field) in values.iter_mut().zip(&fields[1..]) {
        *v = field
            .parse()
            .map_err(|e| malformed(format!("bad field {field:?}: {e}")))?;
        if !v.is_finite() {
            return Err(malformed(format!("field {field:?} is not finite")));
        }
    }
    Ok(MonitorEstimate {
        f_e_mean: values[0],
        std_error: values[1],
        n_measurements,
        sigma_multiplier: values[2],
        f_e_upper_bound: values[3],
    })
}

/// Resolve the error-rate model and record the calibrated curve.
pub fn run_calibrate(config: &ExperimentConfig, out_dir: &Path) -> Result<BerModelParams> {
    let params = config.ber_params()?;
    prepare_out_dir(out_dir, config)?;
    // The anchor columns restate the calibrated curve at the anchor point
    // (nan when the SNR was given directly, with no anchor).
    let anchor_pe = match config.ber.anchor_photons_per_bit {
        Some(n) => ber_model(n, &params)?,
        None => f64::NAN,
    };
    write_csv(
        &out_dir.join(CALIBRATION_FILE),
        CALIBRATION_HEADER,
        std::iter::once(vec![
            format_g10(params.snr_per_photon),
            format_g10(params.impairment_floor),
            format_g10(config.ber.anchor_photons_per_bit.unwrap_or(f64::NAN)),
            format_g10(anchor_pe),
        ]),
    )?;
    Ok(params)
}

/// Generate one scenario's streams and write them as a time-tag file.
/// Returns the path written.
pub fn run_export_tags(
    config: &ExperimentConfig,
    out_dir: &Path,
    format: TagFormat,
) -> Result<PathBuf> {
    let scenario = required_scenario(config, "export-tags")?;
    prepare_out_dir(out_dir, config)?;
    let streams = generate_streams(scenario)?;
    let path = match format {
        TagFormat::Csv => {
            let path = out_dir.join("tags.csv");
            write_tags_csv(&path, &streams.idler, &streams.alice_tap, &streams.bob_tap)?;
            path
        }
        TagFormat::Binary => {
            let path = out_dir.join("tags.bin");
            write_tags_binary(&path, &streams.idler, &streams.alice_tap, &streams.bob_tap)?;
            path
        }
    };
    Ok(path)
}

/// One operating point, certified or not.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportResult {
    pub report: SkrReport,
    /// Pooled monitor result backing the certification, when one was given.
    pub monitor: Option<MonitorEstimate>,
    /// Injection bound the leakage term was evaluated at.
    pub injection_bound: f64,
    /// True when a monitor campaign summary backed the injection bound.
    pub certified: bool,
    pub summary_text: String,
}

impl ReportResult {
    /// The contract for the process exit code: success means a certified,
    /// strictly positive key rate.
    pub fn exit_ok(&self) -> bool {
        self.certified && self.report.skr_clamped_bits_per_s > 0.0
    }
}

/// Evaluate one operating point end to end and write a machine-readable row
/// plus a human-readable summary.
///
/// The operating point is `report.photons_per_bit`, defaulting to the
/// calibration anchor. If `report.monitor_summary_csv` names a campaign
/// summary, its pooled upper bound replaces the configured injection bound
/// and the result counts as certified; otherwise the report is explicitly
/// uncertified.
pub fn run_report(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportResult> {
    let photons_per_bit = config
        .report
        .photons_per_bit
        .or(config.ber.anchor_photons_per_bit)
        .ok_or_else(|| {
            Error::Config(
                "report needs report.photons_per_bit or ber.anchor_photons_per_bit".into(),
            )
        })?;
    let ber = config.ber_params()?;
    let p_e = ber_model(photons_per_bit, &ber)?;
    let monitor = match &config.report.monitor_summary_csv {
        Some(path) => Some(read_monitor_summary_csv(path)?),
        None => None,
    };
    let mut security = config.security_params();
    let certified = monitor.is_some();
    if let Some(m) = &monitor {
        // The pooled bound is already floored at zero; cap it so it stays a
        // valid fraction even for a wildly noisy campaign.
        security.injection_bound = m.f_e_upper_bound.min(1.0);
    }
    prepare_out_dir(out_dir, config)?;
    let report = skr(
        &security,
        p_e,
        photons_per_bit,
        config.effective_mode_plan().modes_per_bit(),
        config.effective_channel().transmissivity(),
    )?;
    let result = ReportResult {
        summary_text: render_summary(&report, monitor.as_ref(), security.injection_bound),
        report,
        monitor,
        injection_bound: security.injection_bound,
        certified,
    };
    write_csv(
        &out_dir.join(REPORT_FILE),
        REPORT_HEADER,
        std::iter::once(vec![
            format_g10(report.photons_per_bit),
            format_g10(report.p_e),
            format_g10(report.i_ab),
            format_g10(report.chi_be),
            format_g10(report.skr_bits_per_s),
            format_g10(report.skr_clamped_bits_per_s),
            format_g10(report.bits_per_mode),
            format_g10(report.rate_loss_bound_bits_per_mode),
            format_g10(result.injection_bound),
            result.certified.to_string(),
        ]),
    )?;
    let text_path = out_dir.join(REPORT_TEXT_FILE);
    std::fs::write(&text_path, &result.summary_text).map_err(|e| Error::io(&text_path, e))?;
    Ok(result)
}

fn render_summary(
    report: &SkrReport,
    monitor: Option<&MonitorEstimate>,
    injection_bound: f64,
) -> String {
    let monitor_line = match monitor {
        Some(m) => format!(
            "channel monitor:     certified, injection fraction <= {} \
             ({} measurements, mean {}, std error {}, {}-sigma bound)",
            format_g10(injection_bound),
            m.n_measurements,
            format_g10(m.f_e_mean),
            format_g10(m.std_error),
            format_g10(m.sigma_multiplier),
        ),
        None => format!(
            "channel monitor:     uncertified; assuming the configured injection bound {}",
            format_g10(injection_bound),
        ),
    };
    let verdict = if monitor.is_none() {
        "uncertified key rate; run a monitor campaign and pass its summary"
    } else if report.skr_clamped_bits_per_s > 0.0 {
        "certified positive key rate"
    } else {
        "no positive key rate at this operating point"
    };
    let lines = [
        "key-rate report".to_owned(),
        String::new(),
        format!(
            "photons per bit:     {}",
            format_g10(report.photons_per_bit)
        ),
        format!("error probability:   {}", format_g10(report.p_e)),
        format!(
            "mutual information:  {} bits/use",
            format_g10(report.i_ab)
        ),
        format!(
            "leakage bound:       {} bits/use",
            format_g10(report.chi_be)
        ),
        format!(
            "secret key rate:     {} bits/s (clamped: {})",
            format_g10(report.skr_bits_per_s),
            format_g10(report.skr_clamped_bits_per_s),
        ),
        format!(
            "bits per mode:       {}",
            format_g10(report.bits_per_mode)
        ),
        format!(
            "repeaterless bound:  {} bits/mode ({})",
            format_g10(report.rate_loss_bound_bits_per_mode),
            if report.bound_respected() {
                "respected"
            } else {
                "EXCEEDED"
            },
        ),
        monitor_line,
        format!("verdict:             {verdict}"),
    ];
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

fn required_scenario<'c>(
    config: &'c ExperimentConfig,
    pipeline: &str,
) -> Result<&'c ScenarioSpec> {
    config.scenario.as_ref().ok_or_else(|| {
        Error::Config(format!("{pipeline} needs a [scenario] section in the config"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use tempfile::tempdir;

    fn sweep_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            "[ber]\nanchor_photons_per_bit = 20.0\nanchor_error_probability = 0.2433\n\
             [skr_sweep]\nphotons_per_bit = [0.0, 5.0, 20.0, 35.0, 50.0]\n",
        )
        .unwrap()
        .resolved(None)
        .unwrap()
    }

    #[test]
    fn skr_sweep_writes_rows_and_echoes_config() {
        let dir = tempdir().unwrap();
        let config = sweep_config();
        let rows = run_skr_sweep(&config, dir.path(), 1).unwrap();
        assert_eq!(rows.len(), 5);
        // No signal photons means a coin-flip channel and zero rate.
        assert_eq!(rows[0].p_e, 0.5);
        assert_eq!(rows[0].skr_clamped_bits_per_s, 0.0);
        let text = std::fs::read_to_string(dir.path().join(SKR_SWEEP_FILE)).unwrap();
        assert!(text.starts_with("photons_per_bit,"));
        assert_eq!(text.lines().count(), 6);
        let echo = std::fs::read_to_string(dir.path().join(RESOLVED_CONFIG_FILE)).unwrap();
        let back = ExperimentConfig::from_toml_str(&echo).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn skr_sweep_bytes_do_not_depend_on_workers() {
        let config = sweep_config();
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        run_skr_sweep(&config, dir_a.path(), 1).unwrap();
        run_skr_sweep(&config, dir_b.path(), 3).unwrap();
        let a = std::fs::read(dir_a.path().join(SKR_SWEEP_FILE)).unwrap();
        let b = std::fs::read(dir_b.path().join(SKR_SWEEP_FILE)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_restates_the_anchor() {
        let dir = tempdir().unwrap();
        let config = sweep_config();
        let params = run_calibrate(&config, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join(CALIBRATION_FILE)).unwrap();
        let row = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_relative_eq!(
            fields[0].parse::<f64>().unwrap(),
            params.snr_per_photon,
            max_relative = 1e-9
        );
        assert_eq!(fields[2], "20");
        assert_relative_eq!(
            fields[3].parse::<f64>().unwrap(),
            0.2433,
            max_relative = 1e-9
        );
    }

    #[test]
    fn summary_csv_round_trips() {
        let dir = tempdir().unwrap();
        let pooled = MonitorEstimate {
            f_e_mean: 5.3e-4,
            std_error: 6.6e-4,
            n_measurements: 54,
            sigma_multiplier: 3.0,
            f_e_upper_bound: 2.51e-3,
        };
        let path = dir.path().join(CAMPAIGN_SUMMARY_FILE);
        write_csv(
            &path,
            CAMPAIGN_SUMMARY_HEADER,
            std::iter::once(summary_row(&pooled)),
        )
        .unwrap();
        let back = read_monitor_summary_csv(&path).unwrap();
        assert_eq!(back.n_measurements, 54);
        assert_relative_eq!(back.f_e_mean, pooled.f_e_mean, max_relative = 1e-9);
        assert_relative_eq!(back.std_error, pooled.std_error, max_relative = 1e-9);
        assert_relative_eq!(
            back.f_e_upper_bound,
            pooled.f_e_upper_bound,
            max_relative = 1e-9
        );
    }

    #[test]
    fn report_is_uncertified_without_a_monitor_summary() {
        let dir = tempdir().unwrap();
        let config = sweep_config();
        let result = run_report(&config, dir.path()).unwrap();
        assert!(!result.certified);
        assert!(!result.exit_ok());
        assert!(result.summary_text.contains("uncertified"));
        assert_relative_eq!(result.report.skr_bits_per_s, 1.3e9, max_relative = 2e-4);
        let text = std::fs::read_to_string(dir.path().join(REPORT_TEXT_FILE)).unwrap();
        assert_eq!(text, result.summary_text);
    }

    #[test]
    fn report_certifies_against_a_campaign_summary() {
        let dir = tempdir().unwrap();
        let pooled = MonitorEstimate {
            f_e_mean: 5.3e-4,
            std_error: 6.6e-4,
            n_measurements: 54,
            sigma_multiplier: 3.0,
            f_e_upper_bound: 2.51e-3,
        };
        let summary_path = dir.path().join(CAMPAIGN_SUMMARY_FILE);
        write_csv(
            &summary_path,
            CAMPAIGN_SUMMARY_HEADER,
            std::iter::once(summary_row(&pooled)),
        )
        .unwrap();
        let mut config = sweep_config();
        config.report.monitor_summary_csv = Some(summary_path);
        let result = run_report(&config, &dir.path().join("report")).unwrap();
        assert!(result.certified);
        assert!(result.exit_ok());
        assert_relative_eq!(result.injection_bound, 2.51e-3, max_relative = 1e-9);
        assert!(result.summary_text.contains("certified"));
        // The measured bound is tighter than the configured 0.003, so the
        // certified rate clears the uncertified one.
        assert!(result.report.skr_bits_per_s > 1.3e9);
    }

    #[test]
    fn output_dir_resolution_order() {
        let config_with_dir = ExperimentConfig {
            output_dir: Some(PathBuf::from("from-config")),
            ..ExperimentConfig::default()
        };
        let flag = PathBuf::from("from-flag");
        let env = PathBuf::from("from-env");
        assert_eq!(
            resolve_output_dir(Some(&flag), &config_with_dir, Some(&env), "report"),
            flag
        );
        assert_eq!(
            resolve_output_dir(None, &config_with_dir, Some(&env), "report"),
            PathBuf::from("from-config")
        );
        let bare = ExperimentConfig::default();
        assert_eq!(
            resolve_output_dir(None, &bare, Some(&env), "report"),
            PathBuf::from("from-env/report")
        );
        assert_eq!(
            resolve_output_dir(None, &bare, None, "report"),
            PathBuf::from("runs/report")
        );
    }
}
