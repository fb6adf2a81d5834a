//! TOML experiment configuration: one file describes one reproducible run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{CoincidenceWindows, ScenarioSpec};
use crate::error::{Error, Result};
use crate::link::{calibrate_ber, BerModelParams, ChannelLabel, ChannelSpec};
use crate::model::ModePlan;
use crate::monitor::DEFAULT_SIGMA_MULTIPLIER;
use crate::security::{skr, ChiModel, SecurityParams};

/// Seed used when neither the config nor the command line provides one.
pub const DEFAULT_SEED: u64 = 0xF100D;

/// Output directory used when nothing else names one, under the working
/// directory.
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Top-level experiment description. Every section has defaults, so a config
/// file states only what it changes; the resolved form (defaults expanded)
/// is echoed next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed; the `--seed` flag overrides it.
    pub seed: Option<u64>,
    /// Output directory; the `--out` flag overrides it.
    pub output_dir: Option<PathBuf>,
    pub mode_plan: Option<ModePlan>,
    /// Channel the key travels over; sets the transmissivity benchmark.
    pub channel: Option<ChannelSpec>,
    pub security: SecuritySection,
    pub ber: BerSection,
    /// Monitored-link description for stream generation; required by the
    /// window-sweep, campaign, and tag-export pipelines.
    pub scenario: Option<ScenarioSpec>,
    pub windows: Option<CoincidenceWindows>,
    pub skr_sweep: SkrSweepSection,
    pub window_sweep: WindowSweepSection,
    pub campaign: CampaignSection,
    pub report: ReportSection,
}

/// Key-rate security parameters minus the bit rate, which always comes from
/// the mode plan so the two cannot disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SecuritySection {
    pub reconciliation_efficiency: f64,
    /// Certified injection-fraction upper bound used when no monitor result
    /// feeds in.
    pub injection_bound: f64,
    pub chi_model: ChiModel,
}

impl Default for SecuritySection {
    fn default() -> Self {
        let d = SecurityParams::default();
        SecuritySection {
            reconciliation_efficiency: d.reconciliation_efficiency,
            injection_bound: d.injection_bound,
            chi_model: d.chi_model,
        }
    }
}

impl SecuritySection {
    pub fn to_params(&self, bit_rate_hz: f64) -> SecurityParams {
        SecurityParams {
            reconciliation_efficiency: self.reconciliation_efficiency,
            bit_rate_hz,
            injection_bound: self.injection_bound,
            chi_model: self.chi_model,
        }
    }
}

/// Error-rate model calibration. Exactly one route must be configured:
/// a direct `snr_per_photon`, a measured `(n, P_e)` anchor, or a
/// `(n, target SKR)` anchor solved through the key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct BerSection {
    pub snr_per_photon: Option<f64>,
    pub impairment_floor: f64,
    pub anchor_photons_per_bit: Option<f64>,
    pub anchor_error_probability: Option<f64>,
    pub anchor_target_skr_bits_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SkrSweepSection {
    /// Explicit photons-per-bit grid; takes precedence over `grid`.
    pub photons_per_bit: Vec<f64>,
    pub grid: Option<GridSpec>,
}

/// Evenly spaced grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config("grid count must be >= 1".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(Error::Config(format!(
                "bad grid range [{}, {}]",
                self.start, self.stop
            )));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| self.start + step * i as f64)
            .collect())
    }
}

impl SkrSweepSection {
    pub fn grid_points(&self) -> Result<Vec<f64>> {
        if !self.photons_per_bit.is_empty() {
            return Ok(self.photons_per_bit.clone());
        }
        match &self.grid {
            Some(g) => g.points(),
            None => Err(Error::Config(
                "skr_sweep needs photons_per_bit = [..] or grid = { start, stop, count }".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct WindowSweepSection {
    /// Coincidence windows to sweep, in seconds.
    pub windows_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSection {
    pub n_measurements: usize,
    pub measurement_duration_s: f64,
    /// How many pooled standard errors the reported upper bound adds.
    pub sigma_multiplier: f64,
    /// Import measured count summaries from this CSV instead of simulating.
    pub rates_csv: Option<PathBuf>,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            n_measurements: 54,
            measurement_duration_s: 60.0,
            sigma_multiplier: DEFAULT_SIGMA_MULTIPLIER,
            rates_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    /// Operating point; falls back to the calibration anchor.
    pub photons_per_bit: Option<f64>,
    /// Campaign `summary.csv` whose upper bound certifies the channel.
    pub monitor_summary_csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize: {e}")))
    }

    /// Expand defaults and derived values into an explicit, self-describing
    /// form: seed and sections filled in, the scenario's source completed.
    /// Flag overrides are applied first.
    pub fn resolved(&self, seed_override: Option<u64>) -> Result<ExperimentConfig> {
        let mut out = self.clone();
        out.seed = Some(seed_override.or(self.seed).unwrap_or(DEFAULT_SEED));
        let mode_plan = out.mode_plan.unwrap_or_default();
        mode_plan.validate()?;
        out.mode_plan = Some(mode_plan);
        out.channel = Some(match out.channel {
            Some(ch) => {
                ch.validate()?;
                ch
            }
            None => ChannelSpec::new(10.0, ChannelLabel::AliceToBob)?,
        });
        out.windows = Some(out.windows.unwrap_or_default());
        if let Some(scenario) = &mut out.scenario {
            scenario.source = scenario.source.completed(&scenario.mode_plan)?;
            if seed_override.is_some() || self.seed.is_some() {
                scenario.seed = out.seed.expect("just set");
            }
            scenario.validate()?;
        }
        Ok(out)
    }

    /// The resolved master seed. Call on a [`ExperimentConfig::resolved`]
    /// config.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn effective_mode_plan(&self) -> ModePlan {
        self.mode_plan.unwrap_or_default()
    }

    pub fn effective_channel(&self) -> ChannelSpec {
        self.channel
            .unwrap_or(ChannelSpec {
                loss_db: 10.0,
                label: ChannelLabel::AliceToBob,
            })
    }

    pub fn effective_windows(&self) -> CoincidenceWindows {
        self.windows.unwrap_or_default()
    }

    pub fn security_params(&self) -> SecurityParams {
        self.security
            .to_params(self.effective_mode_plan().bit_rate_hz)
    }

    /// Resolve the error-rate model from whichever calibration route the
    /// config provides.
    pub fn ber_params(&self) -> Result<BerModelParams> {
        let ber = &self.ber;
        if let Some(kappa) = ber.snr_per_photon {
            return BerModelParams::new(kappa, ber.impairment_floor);
        }
        let Some(n_anchor) = ber.anchor_photons_per_bit else {
            return Err(Error::Config(
                "ber model is uncalibrated: set ber.snr_per_photon, or \
                 ber.anchor_photons_per_bit with either anchor_error_probability \
                 or anchor_target_skr_bits_per_s"
                    .into(),
            ));
        };
        let p_e = match (ber.anchor_error_probability, ber.anchor_target_skr_bits_per_s) {
            (Some(p_e), _) => p_e,
            (None, Some(target)) => self.solve_anchor_error_probability(n_anchor, target)?,
            (None, None) => {
                return Err(Error::Config(
                    "ber anchor needs anchor_error_probability or \
                     anchor_target_skr_bits_per_s"
                        .into(),
                ));
            }
        };
        let kappa = calibrate_ber(n_anchor, p_e, ber.impairment_floor)?;
        BerModelParams::new(kappa, ber.impairment_floor)
    }

    /// Find the anchor error probability that makes the key-rate formula
    /// deliver `target_skr` at `n_anchor` photons per bit, under this
    /// config's security parameters.
    ///
    /// The rate is strictly decreasing in the error probability (the leakage
    /// term does not depend on it), so bisection is exact.
    fn solve_anchor_error_probability(&self, n_anchor: f64, target_skr: f64) -> Result<f64> {
        if !target_skr.is_finite() || target_skr <= 0.0 {
            return Err(Error::Config(format!(
                "anchor_target_skr_bits_per_s must be > 0, got {target_skr}"
            )));
        }
        let security = self.security_params();
        let plan = self.effective_mode_plan();
        let eta = self.effective_channel().transmissivity();
        let rate_at = |p_e: f64| -> Result<f64> {
            Ok(skr(&security, p_e, n_anchor, plan.modes_per_bit(), eta)?.skr_bits_per_s)
        };
        let mut lo = 1e-12;
        let mut hi = 0.5 - 1e-12;
        let at_lo = rate_at(lo)?;
        let at_hi = rate_at(hi)?;
        if target_skr > at_lo || target_skr < at_hi {
            return Err(Error::NoSolution(format!(
                "no error probability reaches {target_skr} bits/s at {n_anchor} photons/bit; \
                 achievable range is [{at_hi:.6e}, {at_lo:.6e}]"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate_at(mid)? >= target_skr {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::ber_model;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_resolves_with_defaults() {
        let config = ExperimentConfig::from_toml_str("").unwrap();
        let resolved = config.resolved(None).unwrap();
        assert_eq!(resolved.seed, Some(DEFAULT_SEED));
        assert_eq!(resolved.effective_mode_plan().bit_rate_hz, 7e9);
        assert_relative_eq!(
            resolved.effective_channel().transmissivity(),
            0.1,
            max_relative = 1e-12
        );
        assert_eq!(resolved.effective_windows().window_s, 3.2e-9);
        assert_eq!(resolved.security.reconciliation_efficiency, 0.94);
        assert_eq!(resolved.campaign.n_measurements, 54);
        // No calibration route configured.
        assert!(matches!(resolved.ber_params(), Err(Error::Config(_))));
    }

    #[test]
    fn seed_priority_is_flag_config_default() {
        let config = ExperimentConfig::from_toml_str("seed = 11").unwrap();
        assert_eq!(config.resolved(None).unwrap().seed, Some(11));
        assert_eq!(config.resolved(Some(5)).unwrap().seed, Some(5));
        let bare = ExperimentConfig::default();
        assert_eq!(bare.resolved(None).unwrap().seed, Some(DEFAULT_SEED));
    }

    #[test]
    fn target_skr_calibration_hits_the_anchor() {
        let config = ExperimentConfig::from_toml_str(
            "[ber]\nanchor_photons_per_bit = 20.0\nanchor_target_skr_bits_per_s = 1.3e9\n",
        )
        .unwrap()
        .resolved(None)
        .unwrap();
        let params = config.ber_params().unwrap();
        let p_e = ber_model(20.0, &params).unwrap();
        let report = skr(
            &config.security_params(),
            p_e,
            20.0,
            config.effective_mode_plan().modes_per_bit(),
            config.effective_channel().transmissivity(),
        )
        .unwrap();
        assert_relative_eq!(report.skr_bits_per_s, 1.3e9, max_relative = 1e-6);
        // The solved anchor agrees with the frozen operating point.
        assert_relative_eq!(p_e, 0.2433, max_relative = 2e-4);
    }

    #[test]
    fn explicit_anchor_and_direct_snr_routes_work() {
        let config = ExperimentConfig::from_toml_str(
            "[ber]\nanchor_photons_per_bit = 20.0\nanchor_error_probability = 0.2433\n",
        )
        .unwrap();
        let params = config.ber_params().unwrap();
        assert_relative_eq!(
            ber_model(20.0, &params).unwrap(),
            0.2433,
            max_relative = 1e-9
        );

        let direct = ExperimentConfig::from_toml_str("[ber]\nsnr_per_photon = 0.0121\n").unwrap();
        assert_relative_eq!(
            direct.ber_params().unwrap().snr_per_photon,
            0.0121,
            max_relative = 1e-15
        );
    }

    #[test]
    fn grids_expand_and_reject_nonsense() {
        let grid = GridSpec {
            start: 1.0,
            stop: 50.0,
            count: 50,
        };
        let points = grid.points().unwrap();
        assert_eq!(points.len(), 50);
        assert_eq!(points[0], 1.0);
        assert_eq!(points[49], 50.0);
        assert_relative_eq!(points[1], 2.0, max_relative = 1e-12);

        assert!(GridSpec {
            start: 5.0,
            stop: 1.0,
            count: 3
        }
        .points()
        .is_err());
        assert!(SkrSweepSection::default().grid_points().is_err());
        let explicit = SkrSweepSection {
            photons_per_bit: vec![20.0],
            grid: None,
        };
        assert_eq!(explicit.grid_points().unwrap(), vec![20.0]);
    }

    #[test]
    fn scenario_source_is_completed_on_resolve() {
        let config = ExperimentConfig::from_toml_str(
            "[scenario]\nduration_s = 1.0\n\
             [scenario.channel_ab]\nloss_db = 3.0\nlabel = \"alice-to-bob\"\n\
             [scenario.source]\nspdc_pair_rate_hz = 120.0\ncenter_wavelength_m = 1.55e-6\n\
             photons_per_bit = 1.4285714285714286e-7\n\
             [scenario.detectors.idler]\nquantum_efficiency = 0.9\nmax_count_rate_hz = 4e6\n\
             [scenario.detectors.alice_tap]\nquantum_efficiency = 0.9\nmax_count_rate_hz = 4e6\n\
             [scenario.detectors.bob_tap]\nquantum_efficiency = 0.8\nmax_count_rate_hz = 4e6\n",
        )
        .unwrap();
        let resolved = config.resolved(Some(3)).unwrap();
        let scenario = resolved.scenario.as_ref().unwrap();
        assert!(scenario.source.ase_power_w > 0.0, "power derived");
        assert_relative_eq!(
            scenario.source.ase_photon_flux_hz().unwrap(),
            1000.0,
            max_relative = 1e-9
        );
        // The flag seed propagates into the scenario.
        assert_eq!(scenario.seed, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("typo_key = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[security]\nbeta = 0.9").is_err());
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let config = ExperimentConfig::from_toml_str(
            "[ber]\nanchor_photons_per_bit = 20.0\nanchor_error_probability = 0.2433\n\
             [skr_sweep]\ngrid = { start = 1.0, stop = 50.0, count = 50 }\n\
             [scenario]\nduration_s = 2.0\nseed = 9\n\
             [scenario.channel_ab]\nloss_db = 3.0\nlabel = \"alice-to-bob\"\n\
             [scenario.source]\nspdc_pair_rate_hz = 120.0\ncenter_wavelength_m = 1.55e-6\n\
             photons_per_bit = 1.4285714285714286e-7\n\
             [scenario.detectors.idler]\nquantum_efficiency = 0.9\nmax_count_rate_hz = 4e6\n\
             [scenario.detectors.alice_tap]\nquantum_efficiency = 0.9\nmax_count_rate_hz = 4e6\n\
             [scenario.detectors.bob_tap]\nquantum_efficiency = 0.8\nmax_count_rate_hz = 4e6\n",
        )
        .unwrap()
        .resolved(None)
        .unwrap();
        let text = config.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, config);
    }
}
