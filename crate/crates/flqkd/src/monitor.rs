//! Calibration-free channel-monitor statistics.
//!
//! The monitor watches three single-photon detectors: the pair source's
//! idler, a tap on the transmitter output, and a tap at the receiver. From
//! six observables (two singles rates, two time-aligned coincidence rates,
//! two time-misaligned ones) it estimates the fraction of light at the
//! receiver that an eavesdropper injected:
//!
//! `f_E = 1 - [(C_IB - C~_IB) / (C_IA - C~_IA)] * (S_A / S_B)`
//!
//! Everything instrument-specific cancels in the ratio: detector quantum
//! efficiencies, dead-time live fractions, channel transmissivity, and source
//! brightness all scale numerator and denominator together, which is what
//! makes the estimator usable without calibration. This module also pools
//! repeated measurements, forms confidence upper bounds, and predicts the
//! measurement time needed for a target precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default confidence multiplier for upper bounds.
pub const DEFAULT_SIGMA_MULTIPLIER: f64 = 3.0;

/// The six monitor observables from one measurement, as rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRates {
    /// Transmitter-tap singles rate S_A, counts/s.
    pub s_a: f64,
    /// Receiver-tap singles rate S_B, counts/s.
    pub s_b: f64,
    /// Time-aligned idler/transmitter-tap coincidence rate C_IA, counts/s.
    pub c_ia: f64,
    /// Time-misaligned (accidental) idler/transmitter-tap rate, counts/s.
    pub c_ia_acc: f64,
    /// Time-aligned idler/receiver-tap coincidence rate C_IB, counts/s.
    pub c_ib: f64,
    /// Time-misaligned (accidental) idler/receiver-tap rate, counts/s.
    pub c_ib_acc: f64,
    /// Measurement duration, seconds.
    pub duration_s: f64,
    /// Coincidence window the aligned/misaligned rates were counted in,
    /// seconds.
    pub window_s: f64,
}

impl CountRates {
    /// Hard sanity checks. Aligned rates running below their accidental
    /// partners is legal statistical noise, so that is only warned about.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("s_a", self.s_a),
            ("s_b", self.s_b),
            ("c_ia", self.c_ia),
            ("c_ia_acc", self.c_ia_acc),
            ("c_ib", self.c_ib),
            ("c_ib_acc", self.c_ib_acc),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    "CountRates",
                    format!("{name} must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::invalid(
                "CountRates",
                format!("duration_s must be > 0, got {}", self.duration_s),
            ));
        }
        if !self.window_s.is_finite() || self.window_s <= 0.0 {
            return Err(Error::invalid(
                "CountRates",
                format!("window_s must be > 0, got {}", self.window_s),
            ));
        }
        if self.c_ia < self.c_ia_acc {
            tracing::warn!(
                c_ia = self.c_ia,
                c_ia_acc = self.c_ia_acc,
                "aligned transmitter-tap coincidences below accidentals"
            );
        }
        if self.c_ib < self.c_ib_acc {
            tracing::warn!(
                c_ib = self.c_ib,
                c_ib_acc = self.c_ib_acc,
                "aligned receiver-tap coincidences below accidentals"
            );
        }
        Ok(())
    }

    /// Default minimum for the true-coincidence rate at the transmitter tap:
    /// five standard deviations of its own Poisson noise over this
    /// measurement's duration. Below it the monitor refuses to certify.
    pub fn default_signal_floor(&self) -> f64 {
        5.0 * ((self.c_ia + self.c_ia_acc) / self.duration_s).sqrt()
    }
}

/// Injection-fraction estimate with the default degenerate-signal floor
/// ([`CountRates::default_signal_floor`]).
pub fn estimate_injection_fraction(rates: &CountRates) -> Result<f64> {
    estimate_injection_fraction_with_floor(rates, rates.default_signal_floor())
}

/// Injection-fraction estimate with an explicit floor on the transmitter-tap
/// true-coincidence rate `C_IA - C~_IA`.
///
/// The returned value is deliberately not clamped to [0, 1]: single
/// measurements fluctuate below zero when the true fraction is near zero, and
/// clamping would bias the pooled mean. Clamp only final upper bounds.
pub fn estimate_injection_fraction_with_floor(
    rates: &CountRates,
    min_true_rate: f64,
) -> Result<f64> {
    rates.validate()?;
    if !min_true_rate.is_finite() || min_true_rate < 0.0 {
        return Err(Error::invalid(
            "min_true_rate",
            format!("must be finite and >= 0, got {min_true_rate}"),
        ));
    }
    if rates.s_a <= 0.0 || rates.s_b <= 0.0 {
        return Err(Error::invalid(
            "CountRates",
            format!(
                "singles rates must be > 0 to form the estimator, got s_a = {}, s_b = {}",
                rates.s_a, rates.s_b
            ),
        ));
    }
    let delta_a = rates.c_ia - rates.c_ia_acc;
    if delta_a <= min_true_rate || delta_a <= 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "transmitter-tap true-coincidence rate {delta_a:.6} counts/s is at or below \
             the floor {min_true_rate:.6}; the monitor cannot certify the channel"
        )));
    }
    let delta_b = rates.c_ib - rates.c_ib_acc;
    Ok(1.0 - (delta_b / delta_a) * (rates.s_a / rates.s_b))
}

/// Single-measurement standard error of the injection-fraction estimate.
///
/// Each of the six observables is a Poisson count `N = rate * T` with
/// `Var(N) = N`. First-order (delta-method) propagation through
/// `f = 1 - (dB/dA) * (S_A/S_B)`, with `dA = C_IA - C~_IA` and
/// `dB = C_IB - C~_IB`, gives
///
/// ```text
/// Var(f) = [ (S_A / (S_B * dA))^2 * (C_IB + C~_IB)
///          + g^2 * ( (C_IA + C~_IA) / dA^2  +  1/S_A  +  1/S_B ) ] / T
/// ```
///
/// where `g = (dB/dA) * (S_A/S_B)`. The first term is `g^2 * (C_IB +
/// C~_IB)/dB^2` rewritten so that `dB = 0` stays finite. The aligned and
/// misaligned windows are disjoint, so their counts are independent; the weak
/// correlation between singles and the coincidences they participate in is
/// neglected. The result scales exactly as `1/sqrt(T)`.
pub fn estimate_std_error(rates: &CountRates) -> Result<f64> {
    Ok((injection_variance_time_product(rates)? / rates.duration_s).sqrt())
}

/// The duration-independent product `Var(f) * T`; see [`estimate_std_error`].
fn injection_variance_time_product(rates: &CountRates) -> Result<f64> {
    rates.validate()?;
    if rates.s_a <= 0.0 || rates.s_b <= 0.0 {
        return Err(Error::invalid(
            "CountRates",
            format!(
                "singles rates must be > 0, got s_a = {}, s_b = {}",
                rates.s_a, rates.s_b
            ),
        ));
    }
    let delta_a = rates.c_ia - rates.c_ia_acc;
    if delta_a <= 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "transmitter-tap true-coincidence rate must be > 0 to propagate errors, \
             got {delta_a}"
        )));
    }
    let delta_b = rates.c_ib - rates.c_ib_acc;
    let g = (delta_b / delta_a) * (rates.s_a / rates.s_b);
    let b_coincidence_term =
        (rates.s_a / (rates.s_b * delta_a)).powi(2) * (rates.c_ib + rates.c_ib_acc);
    let rest = g * g
        * ((rates.c_ia + rates.c_ia_acc) / (delta_a * delta_a)
            + 1.0 / rates.s_a
            + 1.0 / rates.s_b);
    Ok(b_coincidence_term + rest)
}

/// Measurement time that brings the single-measurement standard error down
/// to `target_std_error`, assuming the given rates stay stationary.
///
/// Inverts the `Var(f) = K / T` relation of [`estimate_std_error`], so the
/// answer satisfies sigma(T) proportional to `1/sqrt(T)` exactly.
pub fn required_measurement_time(rates: &CountRates, target_std_error: f64) -> Result<f64> {
    if !target_std_error.is_finite() || target_std_error <= 0.0 {
        return Err(Error::NoSolution(format!(
            "target standard error must be > 0, got {target_std_error}; \
             no finite measurement time reaches it"
        )));
    }
    let delta_b = rates.c_ib - rates.c_ib_acc;
    if delta_b <= 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "receiver-tap true-coincidence rate must be > 0 to plan a measurement, \
             got {delta_b}"
        )));
    }
    let k = injection_variance_time_product(rates)?;
    Ok(k / (target_std_error * target_std_error))
}

/// Pooled result of repeated injection-fraction measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorEstimate {
    /// Sample mean of the per-measurement estimates.
    pub f_e_mean: f64,
    /// Standard error of the mean: sample standard deviation over sqrt(n).
    pub std_error: f64,
    pub n_measurements: u64,
    /// Confidence multiplier used for the stored upper bound.
    pub sigma_multiplier: f64,
    /// `max(0, f_e_mean + sigma_multiplier * std_error)`.
    pub f_e_upper_bound: f64,
}

/// Pool per-measurement estimates with the default 3-sigma bound.
pub fn pool_measurements(estimates: &[f64]) -> Result<MonitorEstimate> {
    pool_measurements_with_sigma(estimates, DEFAULT_SIGMA_MULTIPLIER)
}

/// Pool per-measurement estimates: sample mean, standard error of the mean
/// (sample standard deviation over sqrt(n)), and the k-sigma upper bound.
pub fn pool_measurements_with_sigma(
    estimates: &[f64],
    sigma_multiplier: f64,
) -> Result<MonitorEstimate> {
    if estimates.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "pooling needs at least 2 measurements, got {}",
            estimates.len()
        )));
    }
    if !sigma_multiplier.is_finite() || sigma_multiplier <= 0.0 {
        return Err(Error::invalid(
            "sigma_multiplier",
            format!("must be finite and > 0, got {sigma_multiplier}"),
        ));
    }
    let mut stats = RunningStats::new();
    for (i, &x) in estimates.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::invalid(
                "estimates",
                format!("element {i} must be finite, got {x}"),
            ));
        }
        stats.push(x);
    }
    let mean = stats.mean().expect("nonempty");
    let std_error = stats.std_error().expect("n >= 2");
    let mut estimate = MonitorEstimate {
        f_e_mean: mean,
        std_error,
        n_measurements: stats.count(),
        sigma_multiplier,
        f_e_upper_bound: 0.0,
    };
    estimate.f_e_upper_bound = upper_bound(&estimate, sigma_multiplier)?;
    Ok(estimate)
}

/// k-sigma upper bound on the injection fraction:
/// `max(0, mean + k * std_error)`.
///
/// Clamped at zero because a physical fraction cannot be negative; this is
/// the only place a clamp is applied.
pub fn upper_bound(estimate: &MonitorEstimate, sigma_multiplier: f64) -> Result<f64> {
    if !sigma_multiplier.is_finite() || sigma_multiplier <= 0.0 {
        return Err(Error::invalid(
            "sigma_multiplier",
            format!("must be finite and > 0, got {sigma_multiplier}"),
        ));
    }
    Ok((estimate.f_e_mean + sigma_multiplier * estimate.std_error).max(0.0))
}

/// Round a nonnegative quantity up to one significant figure, e.g.
/// 0.00251 -> 0.003. Presentation only: never feed the result back into
/// computations. Inputs at or below zero return 0.
pub fn round_up_to_one_significant_figure(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 0.0;
    }
    let exponent = x.log10().floor();
    let scale = 10f64.powf(exponent);
    let mantissa = x / scale;
    // The epsilon forgives binary representation wobble so that an input
    // already at one significant figure (0.3) maps to itself, not upward.
    let up = (mantissa - 1e-9).ceil();
    up * scale
}

/// Streaming mean/variance accumulator (Welford), mergeable so partial
/// results from parallel workers combine into the same totals as a
/// sequential pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        RunningStats::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combine two accumulators as if their inputs had been pushed into one.
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        RunningStats { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Unbiased sample variance (n - 1 denominator); needs n >= 2.
    pub fn sample_variance(&self) -> Option<f64> {
        (self.n > 1).then(|| self.m2 / (self.n - 1) as f64)
    }

    pub fn sample_std_dev(&self) -> Option<f64> {
        self.sample_variance().map(f64::sqrt)
    }

    /// Standard error of the mean: sample standard deviation over sqrt(n).
    pub fn std_error(&self) -> Option<f64> {
        self.sample_std_dev().map(|s| s / (self.n as f64).sqrt())
    }
}
