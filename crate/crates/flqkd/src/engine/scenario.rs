//! Physical scenario description and its closed-form rate predictions.
//!
//! [`expected_rates`] is the analytic companion to the Monte Carlo generator:
//! for any scenario it predicts every detector's arrival and recorded rate,
//! the true-coincidence rates, and the accidental rates, so tests can compare
//! sampled statistics against closed form and estimator studies can run
//! noise-free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{transmissivity_from_db, ChannelSpec};
use crate::model::{ModePlan, SourceSpec};
use crate::monitor::CountRates;

/// Hard cap on generated pair rate; above this the per-segment event ids
/// would overflow their packing.
pub const MAX_PAIR_RATE_HZ: f64 = 4e8;

/// Arrival rates above this multiple of a detector's maximum count rate are
/// rejected as configuration mistakes rather than simulated.
pub const MAX_ARRIVAL_OVER_MAX_RATE: f64 = 10.0;

/// One single-photon detector's response model.
///
/// Dead time is non-paralyzable: an arrival within `dead_time` of the last
/// *recorded* event is dropped and does not extend the dead window, so a
/// Poisson arrival rate `r` records at `r / (1 + r * dead_time)`. Timing
/// jitter is Gaussian with a sigma that grows linearly with load,
/// `base_jitter_s * (1 + saturation_jitter_factor * rate / max_count_rate_hz)`,
/// the simplest monotone model of jitter worsening toward saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    /// Detection probability per arriving photon, in [0, 1].
    pub quantum_efficiency: f64,
    /// Saturated (maximum) count rate, counts/s.
    pub max_count_rate_hz: f64,
    /// Timing jitter sigma at low count rates, seconds.
    #[serde(default)]
    pub base_jitter_s: f64,
    /// Fractional jitter growth at full load; 0 keeps jitter rate-independent.
    #[serde(default)]
    pub saturation_jitter_factor: f64,
    /// Non-paralyzable dead time, seconds. `None` defaults to
    /// `1 / max_count_rate_hz`, the dead time that saturates at the maximum
    /// count rate.
    #[serde(default)]
    pub dead_time_s: Option<f64>,
    /// Uncorrelated background counts per second. Off by default; dark counts
    /// add to singles without coincidences and so bias the injection
    /// estimator when enabled.
    #[serde(default)]
    pub dark_count_rate_hz: f64,
}

impl Default for DetectorSpec {
    /// A WSi superconducting-nanowire-like detector: 85% efficiency,
    /// 4 Mcounts/s maximum rate, 60 ps base jitter.
    fn default() -> Self {
        DetectorSpec {
            quantum_efficiency: 0.85,
            max_count_rate_hz: 4e6,
            base_jitter_s: 6e-11,
            saturation_jitter_factor: 0.0,
            dead_time_s: None,
            dark_count_rate_hz: 0.0,
        }
    }
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::invalid(
                "quantum_efficiency",
                format!("must be in [0, 1], got {}", self.quantum_efficiency),
            ));
        }
        if !self.max_count_rate_hz.is_finite() || self.max_count_rate_hz <= 0.0 {
            return Err(Error::invalid(
                "max_count_rate_hz",
                format!("must be > 0, got {}", self.max_count_rate_hz),
            ));
        }
        if !self.base_jitter_s.is_finite() || self.base_jitter_s < 0.0 {
            return Err(Error::invalid(
                "base_jitter_s",
                format!("must be >= 0, got {}", self.base_jitter_s),
            ));
        }
        if !self.saturation_jitter_factor.is_finite() || self.saturation_jitter_factor < 0.0 {
            return Err(Error::invalid(
                "saturation_jitter_factor",
                format!("must be >= 0, got {}", self.saturation_jitter_factor),
            ));
        }
        if let Some(dead) = self.dead_time_s {
            if !dead.is_finite() || dead < 0.0 {
                return Err(Error::invalid(
                    "dead_time_s",
                    format!("must be >= 0, got {dead}"),
                ));
            }
        }
        if !self.dark_count_rate_hz.is_finite() || self.dark_count_rate_hz < 0.0 {
            return Err(Error::invalid(
                "dark_count_rate_hz",
                format!("must be >= 0, got {}", self.dark_count_rate_hz),
            ));
        }
        Ok(())
    }

    /// The dead time actually used: the configured one, else
    /// `1 / max_count_rate_hz`.
    pub fn effective_dead_time_s(&self) -> f64 {
        self.dead_time_s
            .unwrap_or(1.0 / self.max_count_rate_hz)
    }

    /// Jitter sigma at the given operating rate.
    pub fn jitter_sigma_s(&self, rate_hz: f64) -> f64 {
        self.base_jitter_s
            * (1.0 + self.saturation_jitter_factor * rate_hz / self.max_count_rate_hz)
    }
}

/// The channel monitor's three detectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorDetectors {
    pub idler: DetectorSpec,
    pub alice_tap: DetectorSpec,
    pub bob_tap: DetectorSpec,
}

impl MonitorDetectors {
    pub fn validate(&self) -> Result<()> {
        self.idler.validate()?;
        self.alice_tap.validate()?;
        self.bob_tap.validate()
    }
}

fn default_alice_tap_fraction() -> f64 {
    0.02
}
fn default_bob_tap_fraction() -> f64 {
    0.01
}
fn default_alice_tap_attenuation_db() -> f64 {
    29.0
}
fn default_bob_tap_attenuation_db() -> f64 {
    20.0
}
fn default_idler_path_efficiency() -> f64 {
    0.47
}

/// Everything the Monte Carlo generator needs: the light budget, the taps,
/// the one-way channel, the injection ground truth, and the detectors.
///
/// `eve_injection_fraction` is the true fraction of the light at the receiver
/// tap that the adversary injected; the estimator never sees it, so it serves
/// as ground truth for convergence tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub source: SourceSpec,
    #[serde(default)]
    pub mode_plan: ModePlan,
    pub channel_ab: ChannelSpec,
    /// Fraction of the transmitted beam split to the transmitter-tap
    /// detector.
    #[serde(default = "default_alice_tap_fraction")]
    pub alice_tap_fraction: f64,
    /// Fraction of the received beam split to the receiver-tap detector.
    #[serde(default = "default_bob_tap_fraction")]
    pub bob_tap_fraction: f64,
    /// Attenuation inserted before the transmitter-tap detector, dB.
    #[serde(default = "default_alice_tap_attenuation_db")]
    pub alice_tap_attenuation_db: f64,
    /// Attenuation inserted before the receiver-tap detector, dB.
    #[serde(default = "default_bob_tap_attenuation_db")]
    pub bob_tap_attenuation_db: f64,
    /// True injected fraction at the receiver, in [0, 1).
    #[serde(default)]
    pub eve_injection_fraction: f64,
    /// Idler collection efficiency before its detector (coupling and
    /// filtering, excluding detector quantum efficiency).
    #[serde(default = "default_idler_path_efficiency")]
    pub idler_path_efficiency: f64,
    #[serde(default)]
    pub detectors: MonitorDetectors,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    /// Field-level checks; rate-level sanity lives in [`expected_rates`].
    pub fn validate(&self) -> Result<()> {
        self.source.validate(&self.mode_plan)?;
        self.channel_ab.validate()?;
        self.detectors.validate()?;
        for (name, v) in [
            ("alice_tap_fraction", self.alice_tap_fraction),
            ("bob_tap_fraction", self.bob_tap_fraction),
            ("idler_path_efficiency", self.idler_path_efficiency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    name,
                    format!("must be in [0, 1], got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("alice_tap_attenuation_db", self.alice_tap_attenuation_db),
            ("bob_tap_attenuation_db", self.bob_tap_attenuation_db),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0 dB, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.eve_injection_fraction) {
            return Err(Error::invalid(
                "eve_injection_fraction",
                format!(
                    "must be in [0, 1); at 1 the injected rate diverges, got {}",
                    self.eve_injection_fraction
                ),
            ));
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::invalid(
                "duration_s",
                format!("must be > 0, got {}", self.duration_s),
            ));
        }
        Ok(())
    }
}

/// One detector's steady-state operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorLoad {
    /// Photon (plus dark) arrival rate presented to the detector, counts/s.
    pub arrival_rate_hz: f64,
    /// Rate surviving dead time: `arrival / (1 + arrival * dead_time)`.
    pub recorded_rate_hz: f64,
    /// Fraction of arrivals recorded, `1 / (1 + arrival * dead_time)`.
    pub live_fraction: f64,
    /// Jitter sigma at the recorded rate, seconds.
    pub jitter_sigma_s: f64,
}

/// Closed-form rate predictions for a scenario; see [`expected_rates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRates {
    pub idler: DetectorLoad,
    pub alice_tap: DetectorLoad,
    pub bob_tap: DetectorLoad,
    /// Generated signal-idler pairs per second.
    pub pair_flux_hz: f64,
    /// Broadband photon flux at the transmitter, photons/s.
    pub ase_flux_hz: f64,
    /// Injected (idler-uncorrelated) arrival rate at the receiver tap
    /// detector, counts/s.
    pub eve_rate_hz: f64,
    /// Per-photon detection probability of the idler path.
    pub p_idler: f64,
    /// Per-photon detection probability of the transmitter-tap path.
    pub p_alice: f64,
    /// Per-photon detection probability of the receiver-tap path (channel
    /// included).
    pub p_bob: f64,
    /// Recorded idler/transmitter-tap true-coincidence rate, counts/s.
    pub true_coincidence_alice_hz: f64,
    /// Recorded idler/receiver-tap true-coincidence rate, counts/s.
    pub true_coincidence_bob_hz: f64,
}

fn load(arrival_rate_hz: f64, detector: &DetectorSpec) -> DetectorLoad {
    let dead = detector.effective_dead_time_s();
    let live_fraction = 1.0 / (1.0 + arrival_rate_hz * dead);
    let recorded_rate_hz = arrival_rate_hz * live_fraction;
    DetectorLoad {
        arrival_rate_hz,
        recorded_rate_hz,
        live_fraction,
        jitter_sigma_s: detector.jitter_sigma_s(recorded_rate_hz),
    }
}

/// Analytic rate generator: the closed-form mean rates the Monte Carlo
/// engine fluctuates around.
///
/// With broadband flux `F`, pair flux `P`, channel transmissivity `t_ch`,
/// and per-photon path probabilities
///
/// ```text
/// p_idler = idler_path_efficiency * qe_idler
/// p_alice = alice_tap * 10^(-att_A/10) * qe_alice
/// p_bob   = t_ch * bob_tap * 10^(-att_B/10) * qe_bob
/// ```
///
/// the arrival rates are `P * p_idler` (idler), `(F + P) * p_alice`
/// (transmitter tap), and `(F + P) * p_bob + eve` (receiver tap), where
/// `eve = phi/(1 - phi) * (F + P) * p_bob` makes the injected light a `phi`
/// fraction of the receiver-tap total. True-coincidence rates are
/// `P * p_idler * p_tap` scaled by both detectors' live fractions. Tap
/// depletion of the main beam (2% level) is neglected so that each pair
/// member survives each path independently; the Monte Carlo generator makes
/// the same approximation, keeping the two exactly comparable.
pub fn expected_rates(scenario: &ScenarioSpec) -> Result<ExpectedRates> {
    scenario.validate()?;
    let ase_flux_hz = scenario.source.ase_photon_flux_hz()?;
    let pair_flux_hz = scenario.source.spdc_pair_rate_hz;
    if pair_flux_hz > MAX_PAIR_RATE_HZ {
        return Err(Error::invalid(
            "spdc_pair_rate_hz",
            format!("{pair_flux_hz} exceeds the {MAX_PAIR_RATE_HZ} counts/s simulation cap"),
        ));
    }
    let t_ch = scenario.channel_ab.transmissivity();
    let d = &scenario.detectors;
    let p_idler = scenario.idler_path_efficiency * d.idler.quantum_efficiency;
    let p_alice = scenario.alice_tap_fraction
        * transmissivity_from_db(scenario.alice_tap_attenuation_db)?
        * d.alice_tap.quantum_efficiency;
    let p_bob = t_ch
        * scenario.bob_tap_fraction
        * transmissivity_from_db(scenario.bob_tap_attenuation_db)?
        * d.bob_tap.quantum_efficiency;

    let total_flux = ase_flux_hz + pair_flux_hz;
    let phi = scenario.eve_injection_fraction;
    let eve_rate_hz = phi / (1.0 - phi) * total_flux * p_bob;

    let idler = load(
        pair_flux_hz * p_idler + d.idler.dark_count_rate_hz,
        &d.idler,
    );
    let alice_tap = load(
        total_flux * p_alice + d.alice_tap.dark_count_rate_hz,
        &d.alice_tap,
    );
    let bob_tap = load(
        total_flux * p_bob + eve_rate_hz + d.bob_tap.dark_count_rate_hz,
        &d.bob_tap,
    );

    for (name, l, det) in [
        ("idler", &idler, &d.idler),
        ("alice_tap", &alice_tap, &d.alice_tap),
        ("bob_tap", &bob_tap, &d.bob_tap),
    ] {
        if l.arrival_rate_hz > MAX_ARRIVAL_OVER_MAX_RATE * det.max_count_rate_hz {
            return Err(Error::invalid(
                "detectors",
                format!(
                    "{name} arrival rate {:.3e} counts/s exceeds {MAX_ARRIVAL_OVER_MAX_RATE}x \
                     its {:.3e} counts/s maximum; the configuration is inconsistent",
                    l.arrival_rate_hz, det.max_count_rate_hz
                ),
            ));
        }
    }

    let pair_recorded = pair_flux_hz * p_idler * idler.live_fraction;
    Ok(ExpectedRates {
        true_coincidence_alice_hz: pair_recorded * p_alice * alice_tap.live_fraction,
        true_coincidence_bob_hz: pair_recorded * p_bob * bob_tap.live_fraction,
        idler,
        alice_tap,
        bob_tap,
        pair_flux_hz,
        ase_flux_hz,
        eve_rate_hz,
        p_idler,
        p_alice,
        p_bob,
    })
}

impl ExpectedRates {
    /// Fraction of the jitter-broadened coincidence peak a centered window of
    /// the given width captures on the idler/transmitter-tap pair.
    ///
    /// Both members of a pair are jittered independently, so the peak is
    /// Gaussian with combined sigma `sqrt(s_idler^2 + s_tap^2)` and the
    /// captured mass is `erf(w / (2 * sqrt(2) * sigma))`.
    pub fn window_capture_alice(&self, window_s: f64) -> f64 {
        window_capture(window_s, self.idler.jitter_sigma_s, self.alice_tap.jitter_sigma_s)
    }

    /// Receiver-tap counterpart of [`ExpectedRates::window_capture_alice`].
    pub fn window_capture_bob(&self, window_s: f64) -> f64 {
        window_capture(window_s, self.idler.jitter_sigma_s, self.bob_tap.jitter_sigma_s)
    }

    /// The monitor observables these rates predict for a measurement,
    /// assuming the coincidence window captures the entire pair peak.
    ///
    /// Aligned rates are true coincidences plus accidentals; misaligned
    /// rates are the accidentals alone, `S_sync * S_data * window`.
    pub fn count_rates(&self, duration_s: f64, window_s: f64) -> Result<CountRates> {
        self.count_rates_captured(duration_s, window_s, 1.0, 1.0)
    }

    /// Like [`ExpectedRates::count_rates`] but with the finite-window capture
    /// fractions applied to the true-coincidence rates, for windows
    /// comparable to the timing jitter.
    pub fn count_rates_with_window_loss(
        &self,
        duration_s: f64,
        window_s: f64,
    ) -> Result<CountRates> {
        self.count_rates_captured(
            duration_s,
            window_s,
            self.window_capture_alice(window_s),
            self.window_capture_bob(window_s),
        )
    }

    fn count_rates_captured(
        &self,
        duration_s: f64,
        window_s: f64,
        capture_alice: f64,
        capture_bob: f64,
    ) -> Result<CountRates> {
        if !duration_s.is_finite() || duration_s <= 0.0 {
            return Err(Error::invalid(
                "duration_s",
                format!("must be > 0, got {duration_s}"),
            ));
        }
        if !window_s.is_finite() || window_s <= 0.0 {
            return Err(Error::invalid(
                "window_s",
                format!("must be > 0, got {window_s}"),
            ));
        }
        let acc_ia = self.idler.recorded_rate_hz * self.alice_tap.recorded_rate_hz * window_s;
        let acc_ib = self.idler.recorded_rate_hz * self.bob_tap.recorded_rate_hz * window_s;
        Ok(CountRates {
            s_a: self.alice_tap.recorded_rate_hz,
            s_b: self.bob_tap.recorded_rate_hz,
            c_ia: capture_alice * self.true_coincidence_alice_hz + acc_ia,
            c_ia_acc: acc_ia,
            c_ib: capture_bob * self.true_coincidence_bob_hz + acc_ib,
            c_ib_acc: acc_ib,
            duration_s,
            window_s,
        })
    }
}

fn window_capture(window_s: f64, sigma_a_s: f64, sigma_b_s: f64) -> f64 {
    let combined = (sigma_a_s * sigma_a_s + sigma_b_s * sigma_b_s).sqrt();
    if combined <= 0.0 {
        return 1.0;
    }
    libm::erf(window_s / (2.0 * std::f64::consts::SQRT_2 * combined))
}

/// A mid-scale operating point shared by tests across the engine.
#[cfg(test)]
pub(crate) fn reference_scenario() -> ScenarioSpec {
    use crate::link::ChannelLabel;

    let mode_plan = ModePlan::default();
    ScenarioSpec {
        // 2e8 broadband photons/s alongside 1e6 pairs/s.
        source: SourceSpec::from_photons_per_bit(2e8 / 7e9, 1e6, 1.55e-6, &mode_plan).unwrap(),
        mode_plan,
        channel_ab: ChannelSpec::new(10.0, ChannelLabel::AliceToBob).unwrap(),
        alice_tap_fraction: 0.02,
        bob_tap_fraction: 0.01,
        alice_tap_attenuation_db: 29.0,
        bob_tap_attenuation_db: 20.0,
        eve_injection_fraction: 0.05,
        idler_path_efficiency: 0.4,
        detectors: MonitorDetectors {
            idler: DetectorSpec {
                quantum_efficiency: 0.85,
                base_jitter_s: 6e-11,
                saturation_jitter_factor: 1.0,
                ..DetectorSpec::default()
            },
            alice_tap: DetectorSpec {
                quantum_efficiency: 0.85,
                ..DetectorSpec::default()
            },
            bob_tap: DetectorSpec {
                quantum_efficiency: 0.9,
                ..DetectorSpec::default()
            },
        },
        duration_s: 60.0,
        seed: 7,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::ChannelLabel;
    use crate::monitor::estimate_injection_fraction;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_rates_match_frozen_arithmetic() {
        let rates = expected_rates(&reference_scenario()).unwrap();
        assert_relative_eq!(rates.ase_flux_hz, 2e8, max_relative = 1e-9);
        assert_relative_eq!(rates.pair_flux_hz, 1e6, max_relative = 1e-12);
        assert_relative_eq!(rates.p_idler, 0.34, max_relative = 1e-12);
        assert_relative_eq!(rates.p_alice, 2.1401732000500847e-5, max_relative = 1e-9);
        assert_relative_eq!(rates.p_bob, 9.000000000000002e-6, max_relative = 1e-9);
        assert_relative_eq!(rates.idler.arrival_rate_hz, 3.4e5, max_relative = 1e-9);
        assert_relative_eq!(rates.idler.live_fraction, 1.0 / 1.085, max_relative = 1e-9);
        assert_relative_eq!(
            rates.alice_tap.arrival_rate_hz,
            4.301748132100671e3,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            rates.bob_tap.arrival_rate_hz,
            1.90421052631579e3,
            max_relative = 1e-9
        );
        assert_relative_eq!(rates.eve_rate_hz, 95.21052631578951, max_relative = 1e-9);
        assert_relative_eq!(
            rates.true_coincidence_alice_hz,
            6.699328823797339,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            rates.true_coincidence_bob_hz,
            2.818934536491507,
            max_relative = 1e-9
        );
    }

    #[test]
    fn estimator_is_exact_on_closed_form_rates() {
        for phi in [0.0, 0.01, 0.05, 0.10, 0.5] {
            let scenario = ScenarioSpec {
                eve_injection_fraction: phi,
                ..reference_scenario()
            };
            let counts = expected_rates(&scenario)
                .unwrap()
                .count_rates(1e6, 3.2e-9)
                .unwrap();
            let estimate = estimate_injection_fraction(&counts).unwrap();
            assert!(
                (estimate - phi).abs() <= 1e-12,
                "phi = {phi}: estimated {estimate}"
            );
        }
    }

    #[test]
    fn dead_time_correction_saturates_sensibly() {
        let det = DetectorSpec::default();
        assert_relative_eq!(det.effective_dead_time_s(), 2.5e-7, max_relative = 1e-12);
        // At arrival = max rate the detector records exactly half.
        let l = load(4e6, &det);
        assert_relative_eq!(l.recorded_rate_hz, 2e6, max_relative = 1e-12);
        assert_relative_eq!(l.live_fraction, 0.5, max_relative = 1e-12);
        // Explicit zero dead time disables the correction.
        let ideal = DetectorSpec {
            dead_time_s: Some(0.0),
            ..det
        };
        assert_eq!(load(4e6, &ideal).recorded_rate_hz, 4e6);
    }

    #[test]
    fn jitter_grows_linearly_with_load() {
        let det = DetectorSpec {
            base_jitter_s: 6e-11,
            saturation_jitter_factor: 4.0,
            ..DetectorSpec::default()
        };
        assert_relative_eq!(det.jitter_sigma_s(0.0), 6e-11, max_relative = 1e-12);
        assert_relative_eq!(det.jitter_sigma_s(1e6), 1.2e-10, max_relative = 1e-12);
        assert_relative_eq!(det.jitter_sigma_s(4e6), 3e-10, max_relative = 1e-12);
    }

    #[test]
    fn window_capture_follows_the_gaussian_integral() {
        let rates = expected_rates(&reference_scenario()).unwrap();
        // Wide window: everything captured.
        assert_relative_eq!(rates.window_capture_alice(1e-6), 1.0, max_relative = 1e-12);
        // Combined sigma for the idler/transmitter-tap peak; a window of
        // exactly 2 sigma total width captures erf(1/sqrt(2)) ~ 0.6827.
        let s_i = rates.idler.jitter_sigma_s;
        let s_a = rates.alice_tap.jitter_sigma_s;
        let combined = (s_i * s_i + s_a * s_a).sqrt();
        assert_relative_eq!(
            rates.window_capture_alice(2.0 * combined),
            0.6826894921370859,
            max_relative = 1e-9
        );
    }

    #[test]
    fn inconsistent_rates_are_rejected() {
        // Saturate the transmitter tap 10x beyond its maximum.
        let mut scenario = reference_scenario();
        scenario.alice_tap_attenuation_db = 0.0;
        scenario.detectors.alice_tap.max_count_rate_hz = 1e5;
        let err = expected_rates(&scenario).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }), "{err}");

        let mut scenario = reference_scenario();
        scenario.eve_injection_fraction = 1.0;
        assert!(scenario.validate().is_err());

        let mut scenario = reference_scenario();
        scenario.duration_s = 0.0;
        assert!(scenario.validate().is_err());
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let scenario = reference_scenario();
        let text = toml::to_string(&scenario).unwrap();
        let back: ScenarioSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, scenario);
        // Defaults fill omitted tap fields.
        let minimal: ScenarioSpec = toml::from_str(
            "duration_s = 1.0\n[channel_ab]\nloss_db = 10.0\nlabel = \"alice-to-bob\"\n\
             [detectors.idler]\nquantum_efficiency = 0.85\nmax_count_rate_hz = 4e6\n\
             [detectors.alice_tap]\nquantum_efficiency = 0.85\nmax_count_rate_hz = 4e6\n\
             [detectors.bob_tap]\nquantum_efficiency = 0.9\nmax_count_rate_hz = 4e6\n\
             [source]\nase_power_w = 0.0\nspdc_pair_rate_hz = 1e6\n\
             center_wavelength_m = 1.55e-6\nphotons_per_bit = 0.0\n",
        )
        .unwrap();
        assert_eq!(minimal.alice_tap_fraction, 0.02);
        assert_eq!(minimal.bob_tap_attenuation_db, 20.0);
        assert_eq!(minimal.eve_injection_fraction, 0.0);
    }

    proptest! {
        // The estimator inverts the closed-form generator exactly for any
        // parameter draw, the core calibration-independence claim.
        #[test]
        fn estimator_exactness_over_random_scenarios(
            phi in 0.0f64..0.9,
            idler_path in 0.05f64..1.0,
            qe_i in 0.1f64..1.0,
            qe_a in 0.1f64..1.0,
            qe_b in 0.1f64..1.0,
            tap_a in 0.001f64..0.5,
            tap_b in 0.001f64..0.5,
            att_a in 0.0f64..30.0,
            att_b in 0.0f64..30.0,
            loss_db in 0.0f64..20.0,
        ) {
            let mode_plan = ModePlan::default();
            let scenario = ScenarioSpec {
                source: SourceSpec::from_photons_per_bit(2e8 / 7e9, 1e6, 1.55e-6, &mode_plan)
                    .unwrap(),
                mode_plan,
                channel_ab: ChannelSpec::new(loss_db, ChannelLabel::AliceToBob).unwrap(),
                alice_tap_fraction: tap_a,
                bob_tap_fraction: tap_b,
                alice_tap_attenuation_db: att_a,
                bob_tap_attenuation_db: att_b,
                eve_injection_fraction: phi,
                idler_path_efficiency: idler_path,
                detectors: MonitorDetectors {
                    // High-rate detectors so no tap draw trips the
                    // arrival-rate consistency check.
                    idler: DetectorSpec {
                        quantum_efficiency: qe_i,
                        max_count_rate_hz: 1e9,
                        ..DetectorSpec::default()
                    },
                    alice_tap: DetectorSpec {
                        quantum_efficiency: qe_a,
                        max_count_rate_hz: 1e9,
                        ..DetectorSpec::default()
                    },
                    bob_tap: DetectorSpec {
                        quantum_efficiency: qe_b,
                        max_count_rate_hz: 1e9,
                        ..DetectorSpec::default()
                    },
                },
                duration_s: 60.0,
                seed: 0,
            };
            let counts = expected_rates(&scenario)?.count_rates(1e9, 3.2e-9)?;
            let estimate = estimate_injection_fraction(&counts)?;
            prop_assert!((estimate - phi).abs() <= 1e-11, "phi {phi} estimate {estimate}");
        }
    }
}
