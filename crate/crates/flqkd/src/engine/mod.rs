//! Time-tag simulation and analysis for the three-detector channel monitor.
//!
//! [`scenario`] describes a monitored link and predicts its counting rates
//! in closed form; [`generate`] turns a scenario into recorded photon
//! detection streams by Monte Carlo; [`histogram`] and [`rates`] reduce
//! streams to coincidence histograms and monitor observables; [`io`] moves
//! streams and count summaries to and from disk.

pub mod generate;
pub mod histogram;
pub mod io;
pub mod rates;
pub mod scenario;
pub mod stream;

pub use generate::{
    drive, generate_streams, run_measurement, GeneratedStreams, GroundTruthLedger,
    MAX_DURATION_S,
};
pub use histogram::{cross_correlate, CoincidenceHistogram};
pub use rates::{
    extract_rates, locate_coincidence_peak, sweep_window, CoincidenceWindows, PeakLocation,
    WindowSweepPoint,
};
pub use scenario::{
    expected_rates, DetectorLoad, DetectorSpec, ExpectedRates, MonitorDetectors, ScenarioSpec,
    MAX_PAIR_RATE_HZ,
};
pub use stream::{TimeTagStream, CHANNEL_ALICE_TAP, CHANNEL_BOB_TAP, CHANNEL_IDLER};
