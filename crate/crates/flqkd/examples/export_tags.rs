//! Time-tag file formats: CSV and the 16-byte binary record layout.
//!
//! Generates a short run, writes it in both formats, reads both back, and
//! checks the round trips are exact.

use flqkd::engine::io::{read_tags_binary, read_tags_csv, write_tags_binary, write_tags_csv};
use flqkd::engine::{generate_streams, ScenarioSpec};
use flqkd::model::SourceSpec;
use flqkd::{ChannelLabel, ChannelSpec, ModePlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = ModePlan::default();
    let scenario = ScenarioSpec {
        source: SourceSpec::from_photons_per_bit(1e4 / 7e9, 2e4, 1.55e-6, &plan)?,
        mode_plan: plan,
        channel_ab: ChannelSpec::new(3.0, ChannelLabel::AliceToBob)?,
        alice_tap_fraction: 0.3,
        bob_tap_fraction: 0.2,
        alice_tap_attenuation_db: 0.0,
        bob_tap_attenuation_db: 0.0,
        eve_injection_fraction: 0.0,
        idler_path_efficiency: 0.5,
        detectors: Default::default(),
        duration_s: 2.0,
        seed: 7,
    };
    let streams = generate_streams(&scenario)?;

    let dir = std::env::temp_dir().join("flqkd_export_tags_example");
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("tags.csv");
    let bin_path = dir.join("tags.bin");

    write_tags_csv(&csv_path, &streams.idler, &streams.alice_tap, &streams.bob_tap)?;
    write_tags_binary(&bin_path, &streams.idler, &streams.alice_tap, &streams.bob_tap)?;

    let events = streams.idler.recorded_count()
        + streams.alice_tap.recorded_count()
        + streams.bob_tap.recorded_count();
    println!("{events} events over {} s", scenario.duration_s);
    println!(
        "csv:    {:>8} bytes  {}",
        std::fs::metadata(&csv_path)?.len(),
        csv_path.display()
    );
    println!(
        "binary: {:>8} bytes  (16-byte header + {events} x 16-byte records)",
        std::fs::metadata(&bin_path)?.len()
    );

    let (idler_csv, alice_csv, bob_csv) = read_tags_csv(&csv_path, scenario.duration_s)?;
    let (idler_bin, alice_bin, bob_bin) = read_tags_binary(&bin_path, scenario.duration_s)?;
    assert_eq!(idler_csv, streams.idler);
    assert_eq!(alice_csv, streams.alice_tap);
    assert_eq!(bob_csv, streams.bob_tap);
    assert_eq!(idler_bin, streams.idler);
    assert_eq!(alice_bin, streams.alice_tap);
    assert_eq!(bob_bin, streams.bob_tap);
    println!("round trips: exact");

    let text = std::fs::read_to_string(&csv_path)?;
    println!();
    println!("first csv rows:");
    for line in text.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
