//! The calibration-free injection-fraction estimator.
//!
//! Feeds the estimator closed-form counting rates, so it recovers the true
//! injected fraction exactly, and then rescales one receiver arm to show the
//! estimate does not depend on any efficiency or loss calibration.

use flqkd::engine::{expected_rates, ScenarioSpec};
use flqkd::model::SourceSpec;
use flqkd::{estimate_injection_fraction, ChannelLabel, ChannelSpec, CountRates, ModePlan};

fn scenario_with_injection(injected: f64) -> flqkd::Result<ScenarioSpec> {
    let plan = ModePlan::default();
    let mut scenario = ScenarioSpec {
        source: SourceSpec::from_photons_per_bit(2e8 / 7e9, 1e6, 1.55e-6, &plan)?,
        mode_plan: plan,
        channel_ab: ChannelSpec::new(10.0, ChannelLabel::AliceToBob)?,
        alice_tap_fraction: 0.02,
        bob_tap_fraction: 0.01,
        alice_tap_attenuation_db: 29.0,
        bob_tap_attenuation_db: 20.0,
        eve_injection_fraction: injected,
        idler_path_efficiency: 0.47,
        detectors: Default::default(),
        duration_s: 60.0,
        seed: 0,
    };
    scenario.detectors.idler.max_count_rate_hz = 1e9;
    scenario.detectors.alice_tap.max_count_rate_hz = 1e9;
    scenario.detectors.bob_tap.max_count_rate_hz = 1e9;
    Ok(scenario)
}

fn main() -> flqkd::Result<()> {
    println!("{:>10} {:>22} {:>12}", "true", "estimated", "error");
    for &injected in &[0.0, 0.01, 0.05, 0.10, 0.5] {
        let scenario = scenario_with_injection(injected)?;
        let rates = expected_rates(&scenario)?.count_rates(scenario.duration_s, 3.2e-9)?;
        let estimate = estimate_injection_fraction(&rates)?;
        println!(
            "{:>10} {:>22.16} {:>12.2e}",
            injected,
            estimate,
            (estimate - injected).abs()
        );
    }

    // The estimator is a ratio of ratios: any constant factor on a single
    // arm (detector efficiency, splitter loss, attenuator drift) cancels.
    let scenario = scenario_with_injection(0.05)?;
    let rates = expected_rates(&scenario)?.count_rates(scenario.duration_s, 3.2e-9)?;
    let baseline = estimate_injection_fraction(&rates)?;
    let degraded = CountRates {
        s_b: rates.s_b * 0.37,
        c_ib: rates.c_ib * 0.37,
        c_ib_acc: rates.c_ib_acc * 0.37,
        ..rates
    };
    let rescaled = estimate_injection_fraction(&degraded)?;
    println!();
    println!("receiver arm at 37% throughput: {rescaled:.16}");
    println!("difference from baseline:       {:.2e}", (rescaled - baseline).abs());
    Ok(())
}
