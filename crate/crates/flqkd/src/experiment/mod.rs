//! Config-driven experiment pipelines.
//!
//! [`config`] turns one TOML file into a fully resolved experiment
//! description; [`run`] executes the pipelines (key-rate sweep, window
//! sweep, monitor campaign, calibration, tag export, operating-point report)
//! and writes their CSV outputs next to an echo of the resolved config.

pub mod config;
pub mod run;

pub use config::{
    BerSection, CampaignSection, ExperimentConfig, GridSpec, ReportSection, SecuritySection,
    SkrSweepSection, WindowSweepSection, DEFAULT_OUTPUT_ROOT, DEFAULT_SEED,
};
pub use run::{
    prepare_out_dir, read_monitor_summary_csv, resolve_output_dir, run_calibrate,
    run_export_tags, run_monitor_campaign, run_report, run_skr_sweep, run_window_sweep,
    simulate_campaign, CampaignMeasurement, CampaignResult, ReportResult, TagFormat,
    CALIBRATION_FILE, CAMPAIGN_SUMMARY_FILE, MEASUREMENTS_FILE, OUTPUT_ROOT_ENV, REPORT_FILE,
    REPORT_TEXT_FILE, RESOLVED_CONFIG_FILE, SKR_SWEEP_FILE, WINDOW_SWEEP_FILE,
};
