//! Mode accounting and photon budgets for broadband sources.
//!
//! A floodlight transmitter spreads its light over an optical bandwidth far
//! wider than the bit rate, so every bit occupies many temporal modes and the
//! per-mode photon number stays deep in the quantum regime even when the
//! per-bit photon number is large. This module holds that arithmetic:
//! converting optical powers to photon rates, counting modes per bit, and
//! computing per-mode brightness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant times the vacuum speed of light, in joule metres
/// (CODATA, 9 significant digits). A photon at wavelength `lambda` carries
/// energy `PLANCK_TIMES_LIGHTSPEED_J_M / lambda`.
pub const PLANCK_TIMES_LIGHTSPEED_J_M: f64 = 1.98644586e-25;

/// Bandwidth-to-bit-rate ratios below this trigger a warning: the many-modes
/// assumption that underpins the protocol starts to fray.
pub const MODES_PER_BIT_WARN_RATIO: f64 = 10.0;

fn require_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

fn require_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    require_finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {value}")))
    }
}

/// Number of temporal modes spanned by one bit: bandwidth over bit rate.
///
/// Kept as a real number rather than an integer; rounding would bias the
/// brightness at small mode counts. Errors when the bandwidth does not
/// strictly exceed the bit rate, and warns when the ratio drops below
/// [`MODES_PER_BIT_WARN_RATIO`].
pub fn modes_per_bit(bandwidth_hz: f64, bit_rate_hz: f64) -> Result<f64> {
    require_positive("bandwidth_hz", bandwidth_hz)?;
    require_positive("bit_rate_hz", bit_rate_hz)?;
    if bandwidth_hz <= bit_rate_hz {
        return Err(Error::invalid(
            "bandwidth_hz",
            format!(
                "bandwidth ({bandwidth_hz} Hz) must exceed the bit rate ({bit_rate_hz} Hz)"
            ),
        ));
    }
    let m = bandwidth_hz / bit_rate_hz;
    if m < MODES_PER_BIT_WARN_RATIO {
        tracing::warn!(
            modes_per_bit = m,
            "bandwidth is less than {MODES_PER_BIT_WARN_RATIO}x the bit rate; \
             the many-modes-per-bit regime is marginal"
        );
    }
    Ok(m)
}

/// Photon rate carried by an optical power at a given wavelength:
/// `power * wavelength / (h*c)`.
pub fn photon_flux_from_power(power_w: f64, wavelength_m: f64) -> Result<f64> {
    require_nonnegative("power_w", power_w)?;
    require_positive("wavelength_m", wavelength_m)?;
    Ok(power_w * wavelength_m / PLANCK_TIMES_LIGHTSPEED_J_M)
}

/// Optical power carried by a photon rate at a given wavelength; the inverse
/// of [`photon_flux_from_power`].
pub fn power_from_photon_flux(flux_hz: f64, wavelength_m: f64) -> Result<f64> {
    require_nonnegative("flux_hz", flux_hz)?;
    require_positive("wavelength_m", wavelength_m)?;
    Ok(flux_hz * PLANCK_TIMES_LIGHTSPEED_J_M / wavelength_m)
}

/// Mean photon number per optical mode: photons per bit over modes per bit.
pub fn per_mode_brightness(photons_per_bit: f64, modes_per_bit: f64) -> Result<f64> {
    require_nonnegative("photons_per_bit", photons_per_bit)?;
    require_positive("modes_per_bit", modes_per_bit)?;
    Ok(photons_per_bit / modes_per_bit)
}

/// Bandwidth/bit-rate plan tying together W, R, T = 1/R, and M = W/R.
///
/// Only the two independent quantities are stored; the derived ones are
/// methods, so they can never fall out of sync.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModePlan {
    /// Optical bandwidth W of the broadband light, in Hz.
    pub bandwidth_hz: f64,
    /// Modulation bit rate R = 1/T, in bits/s.
    pub bit_rate_hz: f64,
}

impl ModePlan {
    pub fn new(bandwidth_hz: f64, bit_rate_hz: f64) -> Result<Self> {
        let plan = ModePlan {
            bandwidth_hz,
            bit_rate_hz,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        modes_per_bit(self.bandwidth_hz, self.bit_rate_hz).map(|_| ())
    }

    /// Modes per bit, M = W/R.
    pub fn modes_per_bit(&self) -> f64 {
        self.bandwidth_hz / self.bit_rate_hz
    }

    /// Bit duration, T = 1/R, in seconds.
    pub fn bit_duration_s(&self) -> f64 {
        1.0 / self.bit_rate_hz
    }
}

impl Default for ModePlan {
    /// 2.24 THz of optical bandwidth around a 7 Gbit/s modulation: 320
    /// modes per bit.
    fn default() -> Self {
        ModePlan {
            bandwidth_hz: 2.24e12,
            bit_rate_hz: 7e9,
        }
    }
}

/// Transmitter light budget: the broadband key-bearing beam plus the photon
/// pair source that rides along for channel monitoring.
///
/// `photons_per_bit` counts broadband photons only (the pair source is orders
/// of magnitude dimmer) and must equal `ase_power_w` converted to a photon
/// flux times the bit duration; [`SourceSpec::validate`] enforces that, and
/// the `from_power` / `from_photons_per_bit` constructors keep it true by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// Broadband beam power at the transmitter output, in watts. May be
    /// omitted in config files when `photons_per_bit` is given; see
    /// [`SourceSpec::completed`].
    #[serde(default)]
    pub ase_power_w: f64,
    /// Generated signal-idler pairs per second.
    pub spdc_pair_rate_hz: f64,
    /// Center wavelength of both beams, in metres.
    pub center_wavelength_m: f64,
    /// Mean broadband photons transmitted per bit duration. May be omitted
    /// in config files when `ase_power_w` is given.
    #[serde(default)]
    pub photons_per_bit: f64,
}

/// Relative tolerance for the power/photons-per-bit consistency check;
/// loose enough for hand-rounded config values.
const SOURCE_CONSISTENCY_REL_TOL: f64 = 1e-6;

impl SourceSpec {
    /// Build from the beam power, deriving photons per bit.
    pub fn from_power(
        ase_power_w: f64,
        spdc_pair_rate_hz: f64,
        center_wavelength_m: f64,
        plan: &ModePlan,
    ) -> Result<Self> {
        plan.validate()?;
        require_nonnegative("spdc_pair_rate_hz", spdc_pair_rate_hz)?;
        let flux = photon_flux_from_power(ase_power_w, center_wavelength_m)?;
        Ok(SourceSpec {
            ase_power_w,
            spdc_pair_rate_hz,
            center_wavelength_m,
            photons_per_bit: flux * plan.bit_duration_s(),
        })
    }

    /// Build from a photons-per-bit target, deriving the beam power.
    pub fn from_photons_per_bit(
        photons_per_bit: f64,
        spdc_pair_rate_hz: f64,
        center_wavelength_m: f64,
        plan: &ModePlan,
    ) -> Result<Self> {
        plan.validate()?;
        require_nonnegative("photons_per_bit", photons_per_bit)?;
        require_nonnegative("spdc_pair_rate_hz", spdc_pair_rate_hz)?;
        let flux = photons_per_bit * plan.bit_rate_hz;
        Ok(SourceSpec {
            ase_power_w: power_from_photon_flux(flux, center_wavelength_m)?,
            spdc_pair_rate_hz,
            center_wavelength_m,
            photons_per_bit,
        })
    }

    /// Fill in whichever of `ase_power_w` / `photons_per_bit` was left at
    /// zero from the other, so config files only need to state one. A source
    /// with both zero is a valid dark source and passes through unchanged.
    pub fn completed(&self, plan: &ModePlan) -> Result<Self> {
        if self.photons_per_bit == 0.0 && self.ase_power_w > 0.0 {
            SourceSpec::from_power(
                self.ase_power_w,
                self.spdc_pair_rate_hz,
                self.center_wavelength_m,
                plan,
            )
        } else if self.ase_power_w == 0.0 && self.photons_per_bit > 0.0 {
            SourceSpec::from_photons_per_bit(
                self.photons_per_bit,
                self.spdc_pair_rate_hz,
                self.center_wavelength_m,
                plan,
            )
        } else {
            Ok(*self)
        }
    }

    pub fn validate(&self, plan: &ModePlan) -> Result<()> {
        plan.validate()?;
        require_nonnegative("ase_power_w", self.ase_power_w)?;
        require_nonnegative("spdc_pair_rate_hz", self.spdc_pair_rate_hz)?;
        require_nonnegative("photons_per_bit", self.photons_per_bit)?;
        let from_power = self.ase_photon_flux_hz()? * plan.bit_duration_s();
        let scale = self.photons_per_bit.max(from_power).max(f64::MIN_POSITIVE);
        if (self.photons_per_bit - from_power).abs() > SOURCE_CONSISTENCY_REL_TOL * scale {
            return Err(Error::invalid(
                "photons_per_bit",
                format!(
                    "inconsistent with ase_power_w: {} stated vs {} implied by the power",
                    self.photons_per_bit, from_power
                ),
            ));
        }
        Ok(())
    }

    /// Photon rate of the broadband beam, in photons/s.
    pub fn ase_photon_flux_hz(&self) -> Result<f64> {
        photon_flux_from_power(self.ase_power_w, self.center_wavelength_m)
    }

    /// Mean broadband photon number per optical mode.
    pub fn brightness(&self, plan: &ModePlan) -> Result<f64> {
        per_mode_brightness(self.photons_per_bit, plan.modes_per_bit())
    }
}
