//! How long must the monitor integrate to certify a given precision?
//!
//! The injection-fraction estimate is built from Poisson counts, so its
//! standard error falls as 1/sqrt(T). [`required_measurement_time`] inverts
//! that: given one measurement's rates it returns the integration time for a
//! target standard error. The second half cross-checks the scaling against
//! the error model itself and shows how the answer improves with faster
//! detectors and a brighter pair source.

use flqkd::engine::{expected_rates, ScenarioSpec};
use flqkd::model::SourceSpec;
use flqkd::monitor::{estimate_std_error, required_measurement_time};
use flqkd::{ChannelLabel, ChannelSpec, ModePlan};

fn monitored_link(pair_rate_hz: f64, max_count_rate_hz: f64) -> flqkd::Result<ScenarioSpec> {
    let plan = ModePlan::default();
    let mut scenario = ScenarioSpec {
        source: SourceSpec::from_photons_per_bit(2e8 / 7e9, pair_rate_hz, 1.55e-6, &plan)?,
        mode_plan: plan,
        channel_ab: ChannelSpec::new(10.0, ChannelLabel::AliceToBob)?,
        alice_tap_fraction: 0.02,
        bob_tap_fraction: 0.01,
        alice_tap_attenuation_db: 29.0,
        bob_tap_attenuation_db: 20.0,
        eve_injection_fraction: 0.0,
        idler_path_efficiency: 0.47,
        detectors: Default::default(),
        duration_s: 1.0,
        seed: 0,
    };
    scenario.detectors.idler.quantum_efficiency = 0.4;
    scenario.detectors.idler.max_count_rate_hz = max_count_rate_hz;
    Ok(scenario)
}

fn main() -> flqkd::Result<()> {
    // A saturating idler detector: 10 Mpair/s against a 4 Mcps maximum.
    let scenario = monitored_link(1e7, 4e6)?;
    let rates = expected_rates(&scenario)?.count_rates(1.0, 3.2e-9)?;

    println!("{:>14} {:>16}", "target sigma", "time needed (s)");
    for &target in &[1e-2, 3e-3, 1e-3, 6.6e-4, 3e-4] {
        let t = required_measurement_time(&rates, target)?;
        println!("{:>14.1e} {:>16.1}", target, t);
    }

    // sigma(T) = sigma(1 s) / sqrt(T), exactly.
    let sigma_1s = estimate_std_error(&rates)?;
    let t_needed = required_measurement_time(&rates, sigma_1s / 10.0)?;
    println!();
    println!("sigma at 1 s: {sigma_1s:.3e}; 10x better takes {t_needed:.2} s (expect 100)");

    // Faster detectors plus a brighter source cut the time: less of the
    // idler stream is lost to dead time and coincidences come faster.
    let upgraded = monitored_link(7e7, 1.4e7)?;
    let upgraded_rates = expected_rates(&upgraded)?.count_rates(1.0, 3.2e-9)?;
    let target = 6.6e-4;
    let before = required_measurement_time(&rates, target)?;
    let after = required_measurement_time(&upgraded_rates, target)?;
    println!();
    println!(
        "to sigma = {target:.1e}: {before:.0} s at 4 Mcps / {:.0e} pair/s, \
         {after:.0} s with 14 Mcps detectors and 7x pump (ratio {:.1})",
        1e7,
        before / after
    );
    Ok(())
}
