//! Simulation and analysis toolkit for floodlight quantum key distribution
//! (FL-QKD) experiments.
//!
//! FL-QKD spreads broadband light over many optical modes per bit and defends
//! the two-way channel with a photon-coincidence monitor: a small SPDC
//! pair source rides along with the classical-strength beam, and comparing
//! idler coincidences at the transmitter and receiver taps bounds the fraction
//! of injected light an eavesdropper contributes. This crate models the whole
//! chain at desk scale:
//!
//! * [`model`] — mode accounting and source photon budgets
//! * [`link`] — dB bookkeeping, amplifier noise, and the calibrated
//!   error-rate model
//! * [`security`] — binary entropy, Holevo-style leakage bounds, and
//!   secret-key-rate reports
//! * [`monitor`] — the calibration-free injection-fraction estimator, pooling,
//!   confidence bounds, and measurement-time planning
//! * [`engine`] — the Monte Carlo time-tag generator (Poisson arrivals,
//!   pair-correlated thinning, jitter, dead time), coincidence histograms,
//!   rate extraction, and time-tag file formats
//! * [`experiment`] — config-driven pipelines behind the `flqkd` CLI:
//!   SKR sweeps, coincidence-window sweeps, monitor campaigns, reports
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release --example skr_sweep             # calibrated rate-vs-brightness sweep
//! cargo run --release --example injection_estimator   # estimator exactness and invariances
//! cargo run --release --example monitor_campaign      # pooled campaign with confidence bound
//! cargo run --release --example window_sweep          # coincidence-window bias study
//! cargo run --release --example coincidence_histogram # raw cross-correlation view
//! cargo run --release --example measurement_time      # integration-time planning
//! cargo run --release --example export_tags           # time-tag file formats
//! ```
//!
//! The thin `flqkd` binary (crate `flqkd-cli`) exposes the same pipelines as
//! subcommands driven by TOML presets; see `figures/` at the repository root.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod fmt;
pub mod link;
pub mod model;
pub mod monitor;
pub mod security;

pub use engine::{
    cross_correlate, drive, expected_rates, extract_rates, generate_streams,
    locate_coincidence_peak, run_measurement, sweep_window, CoincidenceHistogram,
    CoincidenceWindows, DetectorLoad, DetectorSpec, ExpectedRates, GeneratedStreams,
    GroundTruthLedger, MonitorDetectors, PeakLocation, ScenarioSpec, TimeTagStream,
    WindowSweepPoint, CHANNEL_ALICE_TAP, CHANNEL_BOB_TAP, CHANNEL_IDLER,
};
pub use error::{Error, Result};
pub use experiment::{
    run_calibrate, run_export_tags, run_monitor_campaign, run_report, run_skr_sweep,
    run_window_sweep, simulate_campaign, CampaignResult, ExperimentConfig, ReportResult,
    TagFormat,
};

pub use link::{
    amplifier_ase_photons_per_mode, ber_model, calibrate_ber, cascade_transmissivity,
    transmissivity_from_db, AmplifierSpec, BerModelParams, ChannelLabel, ChannelSpec,
};
pub use model::{
    modes_per_bit, per_mode_brightness, photon_flux_from_power, power_from_photon_flux, ModePlan,
    SourceSpec,
};
pub use monitor::{
    estimate_injection_fraction, estimate_std_error, pool_measurements,
    required_measurement_time, upper_bound, CountRates, MonitorEstimate, RunningStats,
};
pub use security::{
    binary_entropy, bits_per_mode, chi_be, mutual_info_ab, rate_loss_bound_per_mode, skr,
    ChiModel, HolevoBound, SecurityParams, SkrReport,
};
