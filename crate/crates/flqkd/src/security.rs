//! Information-theoretic layer: entropies, the eavesdropper leakage bound,
//! the secret-key-rate formula, and the repeaterless rate-loss benchmark.
//!
//! The secret-key rate in bits/s is
//!
//! `SKR = R * (beta * I_AB(P_e) - chi_BE(f_E, n))`
//!
//! where `I_AB = 1 - h2(P_e)` is the legitimate parties' mutual information
//! per channel use, `chi_BE` bounds the eavesdropper's Holevo information per
//! use given the injection bound `f_E`, and `beta` is the reconciliation
//! efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default coupling for [`ChiModel::PureStateBpsk`].
///
/// Chosen so that the shipped default operating point (20 photons per bit, a
/// 0.3% injection bound, beta = 0.94, R = 7 Gbit/s, and the default error
/// anchor P_e = 0.2433) yields a 1.3 Gbit/s secret-key rate; see
/// `figures/fig3.toml`.
pub const DEFAULT_EVE_COUPLING: f64 = 0.002120458171264478;

/// Binary entropy in bits: `h2(p) = -p log2 p - (1-p) log2 (1-p)`, with the
/// continuity values `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(
            "p",
            format!("must lie in [0, 1], got {p}"),
        ));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Mutual information per channel use of a binary symmetric channel with
/// error probability `p_e`: `1 - h2(p_e)`.
///
/// `p_e` above 0.5 is rejected rather than folded; callers with inverted
/// channels must flip their bit convention explicitly.
pub fn mutual_info_ab(p_e: f64) -> Result<f64> {
    if !p_e.is_finite() || !(0.0..=0.5).contains(&p_e) {
        return Err(Error::invalid(
            "p_e",
            format!("must lie in [0, 0.5], got {p_e}"),
        ));
    }
    Ok(1.0 - binary_entropy(p_e)?)
}

/// Contract for eavesdropper leakage models: bits/use as a function of the
/// injection fraction and the per-bit photon number.
///
/// Implementations must return 0 at `f_e = 0`, stay within [0, 1], and be
/// monotone nondecreasing in both arguments.
pub trait HolevoBound {
    fn chi_be(&self, injection_fraction: f64, photons_per_bit: f64) -> Result<f64>;
}

/// Selectable leakage model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ChiModel {
    /// Two-pure-state bound for binary phase encoding: the eavesdropper's
    /// effective photon number is `N_E = coupling * f_e * n`, her two
    /// conditional states overlap as `s = exp(-2 N_E)`, and the Holevo
    /// information of the pair is `h2((1 - s) / 2)`.
    PureStateBpsk {
        #[serde(default = "default_eve_coupling")]
        coupling: f64,
    },
}

fn default_eve_coupling() -> f64 {
    DEFAULT_EVE_COUPLING
}

impl Default for ChiModel {
    fn default() -> Self {
        ChiModel::PureStateBpsk {
            coupling: DEFAULT_EVE_COUPLING,
        }
    }
}

impl ChiModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ChiModel::PureStateBpsk { coupling } => {
                if !coupling.is_finite() || *coupling <= 0.0 {
                    return Err(Error::invalid(
                        "coupling",
                        format!("must be finite and > 0, got {coupling}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl HolevoBound for ChiModel {
    fn chi_be(&self, injection_fraction: f64, photons_per_bit: f64) -> Result<f64> {
        self.validate()?;
        if !injection_fraction.is_finite() || !(0.0..=1.0).contains(&injection_fraction) {
            return Err(Error::invalid(
                "injection_fraction",
                format!("must lie in [0, 1], got {injection_fraction}"),
            ));
        }
        if !photons_per_bit.is_finite() || photons_per_bit < 0.0 {
            return Err(Error::invalid(
                "photons_per_bit",
                format!("must be finite and >= 0, got {photons_per_bit}"),
            ));
        }
        match self {
            ChiModel::PureStateBpsk { coupling } => {
                let n_e = coupling * injection_fraction * photons_per_bit;
                let overlap = (-2.0 * n_e).exp();
                binary_entropy((1.0 - overlap) / 2.0)
            }
        }
    }
}

/// Eavesdropper leakage bound in bits/use under the given model.
pub fn chi_be(injection_fraction: f64, photons_per_bit: f64, model: &ChiModel) -> Result<f64> {
    model.chi_be(injection_fraction, photons_per_bit)
}

/// Parameters of the secret-key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityParams {
    /// Reconciliation efficiency beta in (0, 1].
    pub reconciliation_efficiency: f64,
    /// Modulation rate R in bits/s.
    pub bit_rate_hz: f64,
    /// Certified upper bound on the injection fraction, in [0, 1].
    pub injection_bound: f64,
    /// Leakage model evaluated at the injection bound.
    pub chi_model: ChiModel,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams {
            reconciliation_efficiency: 0.94,
            bit_rate_hz: 7e9,
            injection_bound: 0.003,
            chi_model: ChiModel::default(),
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        if !self.reconciliation_efficiency.is_finite()
            || self.reconciliation_efficiency <= 0.0
            || self.reconciliation_efficiency > 1.0
        {
            return Err(Error::invalid(
                "reconciliation_efficiency",
                format!("must lie in (0, 1], got {}", self.reconciliation_efficiency),
            ));
        }
        if !self.bit_rate_hz.is_finite() || self.bit_rate_hz <= 0.0 {
            return Err(Error::invalid(
                "bit_rate_hz",
                format!("must be finite and > 0, got {}", self.bit_rate_hz),
            ));
        }
        if !self.injection_bound.is_finite() || !(0.0..=1.0).contains(&self.injection_bound) {
            return Err(Error::invalid(
                "injection_bound",
                format!("must lie in [0, 1], got {}", self.injection_bound),
            ));
        }
        self.chi_model.validate()
    }
}

/// Everything the key-rate formula says about one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkrReport {
    pub photons_per_bit: f64,
    pub p_e: f64,
    /// Mutual information of the legitimate parties, bits/use.
    pub i_ab: f64,
    /// Eavesdropper leakage bound at the injection bound, bits/use.
    pub chi_be: f64,
    /// Raw key rate, bits/s; negative means the point is below breakeven.
    pub skr_bits_per_s: f64,
    /// Key rate floored at zero, bits/s.
    pub skr_clamped_bits_per_s: f64,
    /// Clamped key rate per optical mode.
    pub bits_per_mode: f64,
    /// Repeaterless ceiling for the channel, bits/mode.
    pub rate_loss_bound_bits_per_mode: f64,
}

impl SkrReport {
    /// Whether the achieved bits/mode respects the repeaterless ceiling.
    pub fn bound_respected(&self) -> bool {
        self.bits_per_mode <= self.rate_loss_bound_bits_per_mode
    }
}

/// Evaluate the secret-key-rate formula at one operating point.
///
/// `modes_per_bit` converts the rate to bits/mode and `channel_transmissivity`
/// sets the rate-loss benchmark the report carries alongside.
pub fn skr(
    security: &SecurityParams,
    p_e: f64,
    photons_per_bit: f64,
    modes_per_bit: f64,
    channel_transmissivity: f64,
) -> Result<SkrReport> {
    security.validate()?;
    let i_ab = mutual_info_ab(p_e)?;
    let chi = chi_be(security.injection_bound, photons_per_bit, &security.chi_model)?;
    let raw = security.bit_rate_hz * (security.reconciliation_efficiency * i_ab - chi);
    let clamped = raw.max(0.0);
    Ok(SkrReport {
        photons_per_bit,
        p_e,
        i_ab,
        chi_be: chi,
        skr_bits_per_s: raw,
        skr_clamped_bits_per_s: clamped,
        bits_per_mode: bits_per_mode(clamped, security.bit_rate_hz, modes_per_bit)?,
        rate_loss_bound_bits_per_mode: rate_loss_bound_per_mode(channel_transmissivity)?,
    })
}

/// Repeaterless key-rate ceiling over a transmissivity-eta channel:
/// `-log2(1 - eta)` bits per optical mode. Defined for eta strictly inside
/// (0, 1).
pub fn rate_loss_bound_per_mode(transmissivity: f64) -> Result<f64> {
    if !transmissivity.is_finite() || transmissivity <= 0.0 || transmissivity >= 1.0 {
        return Err(Error::invalid(
            "transmissivity",
            format!("must lie strictly inside (0, 1), got {transmissivity}"),
        ));
    }
    Ok(-(1.0 - transmissivity).log2())
}

/// Key bits per optical mode: `skr / (R * M)`.
pub fn bits_per_mode(skr_bits_per_s: f64, bit_rate_hz: f64, modes_per_bit: f64) -> Result<f64> {
    if !bit_rate_hz.is_finite() || bit_rate_hz <= 0.0 {
        return Err(Error::invalid(
            "bit_rate_hz",
            format!("must be finite and > 0, got {bit_rate_hz}"),
        ));
    }
    if !modes_per_bit.is_finite() || modes_per_bit <= 0.0 {
        return Err(Error::invalid(
            "modes_per_bit",
            format!("must be finite and > 0, got {modes_per_bit}"),
        ));
    }
    if !skr_bits_per_s.is_finite() || skr_bits_per_s < 0.0 {
        return Err(Error::invalid(
            "skr_bits_per_s",
            format!("must be finite and >= 0 (clamp first), got {skr_bits_per_s}"),
        ));
    }
    Ok(skr_bits_per_s / (bit_rate_hz * modes_per_bit))
}
