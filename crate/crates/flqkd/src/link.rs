//! Link budget: dB bookkeeping, amplifier noise, and the calibrated
//! bit-error-rate model of the broadband homodyne receiver.
//!
//! Losses compose as products of transmissivities, a phase-insensitive
//! amplifier adds `n_sp * (G - 1)` noise photons per mode, and the receiver's
//! error probability follows a single-parameter erfc curve anchored to one
//! measured operating point rather than a from-scratch receiver derivation.

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};

/// Direction of a one-way fiber span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelLabel {
    AliceToBob,
    BobToAlice,
}

/// A lumped-loss optical channel. The transmissivity is derived from the dB
/// figure on demand so the two can never disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// One-way attenuation in dB (>= 0).
    pub loss_db: f64,
    pub label: ChannelLabel,
}

impl ChannelSpec {
    pub fn new(loss_db: f64, label: ChannelLabel) -> Result<Self> {
        let spec = ChannelSpec { loss_db, label };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        transmissivity_from_db(self.loss_db).map(|_| ())
    }

    /// Power transmissivity, `10^(-loss_db/10)`, in (0, 1].
    pub fn transmissivity(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }
}

/// Phase-insensitive optical amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierSpec {
    /// Gain in dB (>= 0).
    pub gain_db: f64,
    /// Spontaneous-emission factor n_sp >= 1; 1 is the quantum limit.
    #[serde(default = "default_spontaneous_emission_factor")]
    pub spontaneous_emission_factor: f64,
}

fn default_spontaneous_emission_factor() -> f64 {
    1.0
}

impl AmplifierSpec {
    pub fn new(gain_db: f64, spontaneous_emission_factor: f64) -> Result<Self> {
        let spec = AmplifierSpec {
            gain_db,
            spontaneous_emission_factor,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gain_db.is_finite() || self.gain_db < 0.0 {
            return Err(Error::invalid(
                "gain_db",
                format!("must be finite and >= 0, got {}", self.gain_db),
            ));
        }
        if !self.spontaneous_emission_factor.is_finite() || self.spontaneous_emission_factor < 1.0
        {
            return Err(Error::invalid(
                "spontaneous_emission_factor",
                format!(
                    "must be >= 1 for a phase-insensitive amplifier, got {}",
                    self.spontaneous_emission_factor
                ),
            ));
        }
        Ok(())
    }

    /// Linear gain G = 10^(gain_db/10).
    pub fn gain_linear(&self) -> f64 {
        10f64.powf(self.gain_db / 10.0)
    }
}

/// Convert a nonnegative dB loss to a transmissivity in (0, 1].
///
/// Negative values are rejected: a gain is an amplifier, not a channel.
pub fn transmissivity_from_db(loss_db: f64) -> Result<f64> {
    if !loss_db.is_finite() || loss_db < 0.0 {
        return Err(Error::invalid(
            "loss_db",
            format!("must be finite and >= 0, got {loss_db}"),
        ));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Product of a chain of transmissivities, each in (0, 1].
///
/// An empty chain is the identity channel and returns 1.0.
pub fn cascade_transmissivity(transmissivities: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for (i, &eta) in transmissivities.iter().enumerate() {
        if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
            return Err(Error::invalid(
                "transmissivities",
                format!("element {i} must lie in (0, 1], got {eta}"),
            ));
        }
        product *= eta;
    }
    Ok(product)
}

/// Noise photons per mode added by a phase-insensitive amplifier:
/// `n_sp * (G - 1)`.
pub fn amplifier_ase_photons_per_mode(amp: &AmplifierSpec) -> Result<f64> {
    amp.validate()?;
    Ok(amp.spontaneous_emission_factor * (amp.gain_linear() - 1.0))
}

/// Receiver error-probability model: an erfc curve in the per-bit photon
/// number with one sensitivity parameter, plus a residual impairment floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerModelParams {
    /// Effective SNR contributed by each transmitted photon per bit.
    pub snr_per_photon: f64,
    /// Residual error probability from unmodeled impairments, in [0, 0.5).
    #[serde(default)]
    pub impairment_floor: f64,
}

impl BerModelParams {
    pub fn new(snr_per_photon: f64, impairment_floor: f64) -> Result<Self> {
        let params = BerModelParams {
            snr_per_photon,
            impairment_floor,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.snr_per_photon.is_finite() || self.snr_per_photon <= 0.0 {
            return Err(Error::invalid(
                "snr_per_photon",
                format!("must be finite and > 0, got {}", self.snr_per_photon),
            ));
        }
        if !self.impairment_floor.is_finite()
            || !(0.0..0.5).contains(&self.impairment_floor)
        {
            return Err(Error::invalid(
                "impairment_floor",
                format!("must lie in [0, 0.5), got {}", self.impairment_floor),
            ));
        }
        Ok(())
    }
}

/// Bit-error probability at a given per-bit photon number:
///
/// `P_e = floor + (1 - 2*floor) * 0.5 * erfc(sqrt(snr_per_photon * n))`
///
/// Strictly decreasing in `n`, equal to 0.5 at `n = 0`, and approaching the
/// impairment floor as `n` grows.
pub fn ber_model(photons_per_bit: f64, params: &BerModelParams) -> Result<f64> {
    params.validate()?;
    if !photons_per_bit.is_finite() || photons_per_bit < 0.0 {
        return Err(Error::invalid(
            "photons_per_bit",
            format!("must be finite and >= 0, got {photons_per_bit}"),
        ));
    }
    let raw = 0.5 * erfc((params.snr_per_photon * photons_per_bit).sqrt());
    Ok(params.impairment_floor + (1.0 - 2.0 * params.impairment_floor) * raw)
}

/// Relative tolerance of the calibration solve.
const CALIBRATION_REL_TOL: f64 = 1e-9;

/// Solve for the `snr_per_photon` that makes [`ber_model`] pass through one
/// measured anchor point `(anchor_photons_per_bit, anchor_error_probability)`.
///
/// The model is strictly decreasing in `snr_per_photon` at fixed `n`, so a
/// geometric bracket plus bisection converges unconditionally. The result
/// reproduces the anchor to about 1e-9 relative.
pub fn calibrate_ber(
    anchor_photons_per_bit: f64,
    anchor_error_probability: f64,
    impairment_floor: f64,
) -> Result<f64> {
    if !anchor_photons_per_bit.is_finite() || anchor_photons_per_bit <= 0.0 {
        return Err(Error::invalid(
            "anchor_photons_per_bit",
            format!("must be finite and > 0, got {anchor_photons_per_bit}"),
        ));
    }
    if !anchor_error_probability.is_finite()
        || anchor_error_probability <= 0.0
        || anchor_error_probability >= 0.5
    {
        return Err(Error::invalid(
            "anchor_error_probability",
            format!("must lie strictly inside (0, 0.5), got {anchor_error_probability}"),
        ));
    }
    if !impairment_floor.is_finite() || !(0.0..0.5).contains(&impairment_floor) {
        return Err(Error::invalid(
            "impairment_floor",
            format!("must lie in [0, 0.5), got {impairment_floor}"),
        ));
    }
    if anchor_error_probability <= impairment_floor {
        return Err(Error::NoSolution(format!(
            "anchor error probability {anchor_error_probability} does not exceed the \
             impairment floor {impairment_floor}; no positive SNR reaches it"
        )));
    }

    let pe_at = |kappa: f64| {
        let params = BerModelParams {
            snr_per_photon: kappa,
            impairment_floor,
        };
        // Parameters are pre-validated; kappa stays positive throughout.
        ber_model(anchor_photons_per_bit, &params).expect("validated ber inputs")
    };

    // Geometric bracket: walk kappa outward until the anchor is enclosed.
    let mut lo = 1e-30;
    let mut hi = 1e30;
    let mut k = 1.0 / anchor_photons_per_bit;
    for _ in 0..200 {
        if pe_at(k) > anchor_error_probability {
            // Too little SNR; the solution has more.
            lo = k;
            k *= 4.0;
        } else {
            hi = k;
            k /= 4.0;
        }
        if lo > 1e-30 && hi < 1e30 {
            break;
        }
    }
    if lo >= hi {
        return Err(Error::NoSolution(format!(
            "failed to bracket an SNR reproducing P_e = {anchor_error_probability}"
        )));
    }

    // Bisection on the monotone map kappa -> P_e.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pe_at(mid) > anchor_error_probability {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= CALIBRATION_REL_TOL * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn transmissivity_matches_known_points() {
        assert_relative_eq!(transmissivity_from_db(10.0).unwrap(), 0.1, max_relative = 1e-12);
        assert_eq!(transmissivity_from_db(0.0).unwrap(), 1.0);
        // Half-power point.
        assert_relative_eq!(
            transmissivity_from_db(3.0103).unwrap(),
            0.4999999950079739,
            max_relative = 1e-12
        );
        assert!(transmissivity_from_db(-0.1).is_err());
        assert!(transmissivity_from_db(f64::NAN).is_err());
    }

    #[test]
    fn cascade_composes_losses() {
        // 10 dB of fiber plus 4.7 dB of insertion loss.
        let eta = cascade_transmissivity(&[0.1, 10f64.powf(-0.47)]).unwrap();
        assert_relative_eq!(eta, 0.033884415613920256, max_relative = 1e-12);
        assert_eq!(cascade_transmissivity(&[]).unwrap(), 1.0);
        assert_eq!(cascade_transmissivity(&[1.0, 1.0]).unwrap(), 1.0);
        assert_relative_eq!(cascade_transmissivity(&[0.5, 0.5]).unwrap(), 0.25, epsilon = 0.0);
        assert!(cascade_transmissivity(&[0.5, 0.0]).is_err());
        assert!(cascade_transmissivity(&[1.5]).is_err());
    }

    #[test]
    fn amplifier_noise_matches_known_points() {
        let amp = AmplifierSpec::new(30.0, 1.0).unwrap();
        assert_relative_eq!(
            amplifier_ase_photons_per_mode(&amp).unwrap(),
            999.0,
            max_relative = 1e-12
        );
        let unity = AmplifierSpec::new(0.0, 2.5).unwrap();
        assert_eq!(amplifier_ase_photons_per_mode(&unity).unwrap(), 0.0);
        let three_db = AmplifierSpec::new(3.0103, 2.0).unwrap();
        assert_relative_eq!(
            amplifier_ase_photons_per_mode(&three_db).unwrap(),
            2.0,
            max_relative = 1e-4
        );
        assert!(AmplifierSpec::new(10.0, 0.5).is_err());
        assert!(AmplifierSpec::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn ber_model_matches_known_points() {
        let params = BerModelParams::new(0.01186, 0.0).unwrap();
        // No signal: coin flip.
        assert_eq!(ber_model(0.0, &params).unwrap(), 0.5);
        assert_relative_eq!(
            ber_model(20.0, &params).unwrap(),
            0.24548494827222012,
            max_relative = 1e-12
        );
        // 0.5 * erfc(1).
        let unit = BerModelParams::new(1.0, 0.0).unwrap();
        assert_relative_eq!(
            ber_model(1.0, &unit).unwrap(),
            0.07864960352514257,
            max_relative = 1e-12
        );
        // Large n asymptote with no floor.
        assert!(ber_model(1e6, &unit).unwrap() < 1e-12);
        // With a floor, the floor is the asymptote and 0 photons still flips coins.
        let floored = BerModelParams::new(1.0, 0.01).unwrap();
        assert_eq!(ber_model(0.0, &floored).unwrap(), 0.5);
        assert_relative_eq!(ber_model(1e6, &floored).unwrap(), 0.01, max_relative = 1e-9);
    }

    #[test]
    fn ber_model_is_strictly_decreasing() {
        let params = BerModelParams::new(0.0121, 0.003).unwrap();
        let mut prev = ber_model(0.0, &params).unwrap();
        for i in 1..=100 {
            let n = i as f64 * 0.5;
            let pe = ber_model(n, &params).unwrap();
            assert!(
                pe < prev,
                "P_e must strictly decrease: P_e({n}) = {pe} vs previous {prev}"
            );
            prev = pe;
        }
    }

    #[test]
    fn calibration_matches_oracle() {
        let kappa = calibrate_ber(20.0, 0.2433, 0.0).unwrap();
        assert_relative_eq!(kappa, 0.012100891095305173, max_relative = 1e-6);
        // Round-number anchor: 0.5*erfc(1) ~ 0.0786 at one photon.
        let unit = calibrate_ber(1.0, 0.0786, 0.0).unwrap();
        assert!((unit - 1.0).abs() <= 1e-3, "kappa = {unit}");
        assert_relative_eq!(unit, 1.0004781538779302, max_relative = 1e-6);
    }

    #[test]
    fn calibration_rejects_out_of_range_anchors() {
        assert!(calibrate_ber(20.0, 0.5, 0.0).is_err());
        assert!(calibrate_ber(20.0, 0.0, 0.0).is_err());
        assert!(calibrate_ber(0.0, 0.2, 0.0).is_err());
        // Anchor at or below the floor has no solution.
        assert!(matches!(
            calibrate_ber(20.0, 0.01, 0.02),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn calibration_near_half_gives_tiny_kappa() {
        let kappa = calibrate_ber(10.0, 0.499999, 0.0).unwrap();
        assert!(kappa < 1e-9, "kappa = {kappa}");
    }

    proptest! {
        #[test]
        fn calibration_round_trip(
            anchor_n in 0.1f64..1e4,
            // Keep the anchor meaningfully above the floor and below 0.5.
            anchor_pe in 0.001f64..0.49,
            floor_frac in 0.0f64..0.9,
        ) {
            let floor = anchor_pe * floor_frac * 0.9;
            let kappa = calibrate_ber(anchor_n, anchor_pe, floor).unwrap();
            let params = BerModelParams { snr_per_photon: kappa, impairment_floor: floor };
            let back = ber_model(anchor_n, &params).unwrap();
            prop_assert!((back - anchor_pe).abs() <= 1e-8 * anchor_pe,
                "anchor {anchor_pe} reproduced as {back}");
        }

        #[test]
        fn cascade_is_order_independent(mut etas in proptest::collection::vec(1e-6f64..=1.0, 0..8)) {
            let forward = cascade_transmissivity(&etas).unwrap();
            etas.reverse();
            let reverse = cascade_transmissivity(&etas).unwrap();
            prop_assert!((forward - reverse).abs() <= 1e-15 * forward.max(reverse));
        }

        #[test]
        fn db_losses_add_as_transmissivities_multiply(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let lhs = transmissivity_from_db(a).unwrap() * transmissivity_from_db(b).unwrap();
            let rhs = transmissivity_from_db(a + b).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs));
        }
    }
}
