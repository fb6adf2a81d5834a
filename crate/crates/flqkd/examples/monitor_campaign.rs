//! A repeated-measurement monitor campaign against Monte Carlo data.
//!
//! Runs independent seeded measurements of a quiet channel, estimates the
//! injected fraction from each, and pools the estimates into a mean, a
//! standard error, and the 3-sigma upper bound a key-rate report would
//! certify against.

use flqkd::engine::{CoincidenceWindows, ScenarioSpec};
use flqkd::model::SourceSpec;
use flqkd::monitor::{
    estimate_injection_fraction, pool_measurements, round_up_to_one_significant_figure,
};
use flqkd::{simulate_campaign, ChannelLabel, ChannelSpec, ModePlan};

fn main() -> flqkd::Result<()> {
    let plan = ModePlan::default();
    let mut scenario = ScenarioSpec {
        // A dim pair source and strong taps keep desk-scale runtimes; the
        // estimator cares only about counts, not absolute rates.
        source: SourceSpec::from_photons_per_bit(1000.0 / 7e9, 120.0, 1.55e-6, &plan)?,
        mode_plan: plan,
        channel_ab: ChannelSpec::new(3.0, ChannelLabel::AliceToBob)?,
        alice_tap_fraction: 0.4,
        bob_tap_fraction: 0.4,
        alice_tap_attenuation_db: 0.0,
        bob_tap_attenuation_db: 0.0,
        eve_injection_fraction: 0.0,
        idler_path_efficiency: 0.6,
        detectors: Default::default(),
        duration_s: 60.0,
        seed: 11,
    };
    scenario.detectors.idler.quantum_efficiency = 0.9;
    scenario.detectors.alice_tap.quantum_efficiency = 0.9;
    scenario.detectors.bob_tap.quantum_efficiency = 0.8;

    let n_measurements = 54;
    let windows = CoincidenceWindows::default();
    let runs = simulate_campaign(&scenario, &windows, n_measurements, scenario.seed)?;

    let mut estimates = Vec::with_capacity(runs.len());
    for (i, rates) in runs.iter().enumerate() {
        let f_e = estimate_injection_fraction(rates)?;
        estimates.push(f_e);
        if i < 5 {
            println!(
                "measurement {i:>2}: f = {f_e:>9.5}  (C_IA - acc = {:.1} counts)",
                (rates.c_ia - rates.c_ia_acc) * rates.duration_s
            );
        }
    }
    println!("... {} measurements total", estimates.len());

    let pooled = pool_measurements(&estimates)?;
    println!();
    println!(
        "pooled: f = {:.5} +- {:.5}  ({} x {} s)",
        pooled.f_e_mean, pooled.std_error, pooled.n_measurements, scenario.duration_s
    );
    println!(
        "certified upper bound: {:.5} ({} sigma), quoted as {}",
        pooled.f_e_upper_bound,
        pooled.sigma_multiplier,
        round_up_to_one_significant_figure(pooled.f_e_upper_bound)
    );
    Ok(())
}
